"""Network deployment: density coupling, node drops, grids, S-D pairing.

A single scaling knob n sets every density in the co-existing system:
the licensed (primary) network has density n, the unlicensed (secondary)
network has density m = n**beta with beta > 1, and the infrastructure
variant places l = round(n**(gamma/2))**2 base stations on an exact
square lattice.  One seed per trial; each sampling step below draws from
its own derived substream so adding or removing a component never
perturbs the others.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from .geometry import (
    CellGrid,
    NodeSet,
    build_grid,
    sample_ppp,
    substream_seed,
)

SCHEMA_VERSION = 1

# substream labels for the per-trial master seed
_STREAM_PRIMARY = 1
_STREAM_SECONDARY = 2
_STREAM_PRIMARY_PAIRS = 3
_STREAM_SECONDARY_PAIRS = 4


class Model(str, enum.Enum):
    AD_HOC = "adhoc"
    INFRASTRUCTURE = "infrastructure"


def round_half_up(x: float) -> int:
    """round() with ties away from zero; Python's banker rounding would
    send half-integer region widths down instead of up."""
    return int(math.floor(x + 0.5))


@dataclass
class ScalingConfig:
    """All free parameters of one experiment.

    delta_p is the secondary-to-primary transmit power ratio; None means
    "derive 0.9 * min(delta_p_max, 1) from the interference bound".
    """

    n: float = 200.0            # primary node density
    beta: float = 1.5           # m = n**beta, beta > 1
    gamma: float = 0.6          # l = round(n**(gamma/2))**2, 0 < gamma < 1
    alpha: float = 4.0          # path loss exponent, > 2 for summable interference
    power: float = 1.0          # per-node power budget P
    noise: float = 1.0          # thermal noise N0
    delta_loss: float = 0.1     # tolerated fractional primary rate loss
    delta_p: Optional[float] = None
    delta_a: float = 0.25       # avoidance region area fraction per lattice cell
    delta_t: float = 0.5        # time split between the two secondary phases
    epsilon: float = 0.1        # slack used by the w.h.p. concentration bounds
    model: Model = Model.AD_HOC

    def validate(self) -> None:
        if self.n < 3:
            raise ValueError(f"n must be >= 3, got {self.n}")
        if self.beta <= 1:
            raise ValueError(f"beta must exceed 1, got {self.beta}")
        if not (0 < self.gamma < 1):
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.alpha <= 2:
            raise ValueError(f"alpha must exceed 2, got {self.alpha}")
        if self.power <= 0 or self.noise <= 0:
            raise ValueError("power and noise must be positive")
        if not (0 <= self.delta_loss < 1):
            raise ValueError(f"delta_loss must lie in [0, 1), got {self.delta_loss}")
        if self.delta_p is not None and not (0 < self.delta_p <= 1):
            raise ValueError(f"delta_p must lie in (0, 1], got {self.delta_p}")
        if not (0 < self.delta_a < 1):
            raise ValueError(f"delta_a must lie in (0, 1), got {self.delta_a}")
        if not (0 < self.delta_t < 1):
            raise ValueError(f"delta_t must lie in (0, 1), got {self.delta_t}")
        if not (0 < self.epsilon < 1):
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingConfig":
        d = dict(d)
        if "model" in d:
            d["model"] = Model(d["model"])
        cfg = cls(**d)
        cfg.validate()
        return cfg


def derive_densities(cfg: ScalingConfig) -> tuple[float, int]:
    """(m, l) implied by n: m = n**beta, l = round(n**(gamma/2))**2.

    l is forced to a perfect square so the base stations form an exact
    lattice; it is always at least 1.
    """
    m = cfg.n ** cfg.beta
    root = max(1, round_half_up(cfg.n ** (cfg.gamma / 2.0)))
    return m, root * root


def primary_cell_area(n: float) -> float:
    """2 log(n) / n, natural log; one relay per cell w.h.p."""
    return 2.0 * math.log(n) / n


def secondary_cell_area(m: float) -> float:
    return 2.0 * math.log(m) / m


@dataclass
class SDPairing:
    """Random perfect matching of a node set into source-destination pairs."""

    sources: np.ndarray          # int indices, length count // 2
    dests: np.ndarray            # int indices, same length
    unpaired: Optional[int]      # leftover node when the count is odd

    @property
    def num_pairs(self) -> int:
        return int(self.sources.shape[0])

    def pairs(self) -> list[tuple[int, int]]:
        return [(int(s), int(d)) for s, d in zip(self.sources, self.dests)]


def pair_random(nodes: NodeSet, seed: int) -> SDPairing:
    """Uniform random matching: shuffle, then pair consecutive entries."""
    if nodes.count < 2:
        raise ValueError(f"need at least 2 nodes to pair, got {nodes.count}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(nodes.count)
    half = nodes.count // 2
    sources = perm[0 : 2 * half : 2].copy()
    dests = perm[1 : 2 * half : 2].copy()
    unpaired = int(perm[-1]) if nodes.count % 2 else None
    return SDPairing(sources=sources, dests=dests, unpaired=unpaired)


@dataclass
class NetworkInstance:
    """One realized deployment of the co-existing networks."""

    config: ScalingConfig
    seed: int
    m: float
    l: int
    primary: NodeSet
    secondary: NodeSet
    bs_positions: np.ndarray     # (l, 2) lattice for Infrastructure, else (0, 2)
    primary_pairs: Optional[SDPairing]
    secondary_pairs: Optional[SDPairing]
    primary_grid: CellGrid       # area 2 log n / n (ad hoc) or 1/l (infrastructure)
    secondary_grid: CellGrid     # area 2 log m / m in both models
    bs_grid: CellGrid            # area 1/l lattice geometry

    @property
    def model(self) -> Model:
        return self.config.model

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "seed": self.seed,
            "m": self.m,
            "l": self.l,
            "primary_nodes": self.primary.positions.tolist(),
            "secondary_nodes": self.secondary.positions.tolist(),
            "bs_positions": self.bs_positions.tolist(),
            "primary_pairs": _pairing_dict(self.primary_pairs),
            "secondary_pairs": _pairing_dict(self.secondary_pairs),
            "grids": {
                "primary": {"cells_per_side": self.primary_grid.cells_per_side,
                            "nominal_area": self.primary_grid.nominal_area},
                "secondary": {"cells_per_side": self.secondary_grid.cells_per_side,
                              "nominal_area": self.secondary_grid.nominal_area},
                "bs": {"cells_per_side": self.bs_grid.cells_per_side,
                       "nominal_area": self.bs_grid.nominal_area},
            },
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")


def _pairing_dict(pairing: Optional[SDPairing]) -> Optional[dict]:
    if pairing is None:
        return None
    return {
        "sources": pairing.sources.tolist(),
        "dests": pairing.dests.tolist(),
        "unpaired": pairing.unpaired,
    }


def bs_lattice(grid: CellGrid) -> np.ndarray:
    """Base stations at the centers of every lattice cell, row-major order."""
    s = grid.cells_per_side
    side = grid.cell_side
    coords = [( (c + 0.5) * side, (r + 0.5) * side ) for r in range(s) for c in range(s)]
    return np.array(coords, dtype=np.float64)


def deploy(cfg: ScalingConfig, seed: int, include_secondary: bool = True) -> NetworkInstance:
    """Sample a full instance: nodes, lattice, grids, and S-D pairings.

    include_secondary=False skips the secondary node drop and pairing for
    primary-only sweeps; the primary draws are unchanged because every
    component reads its own substream.

    Args:
        cfg: validated scaling configuration.
        seed: master seed for this trial.
        include_secondary: sample the unlicensed network too.

    Returns:
        NetworkInstance with realized node sets and grid geometry.
    """
    cfg.validate()
    m, l = derive_densities(cfg)

    primary = sample_ppp(cfg.n, substream_seed(seed, _STREAM_PRIMARY))
    if include_secondary:
        secondary = sample_ppp(m, substream_seed(seed, _STREAM_SECONDARY))
    else:
        secondary = NodeSet(positions=np.empty((0, 2)))

    bs_grid = build_grid(1.0 / l)
    if bs_grid.num_cells != l:
        raise ValueError(f"lattice for l={l} base stations is not exact")
    if cfg.model is Model.INFRASTRUCTURE:
        primary_grid = bs_grid
        bs = bs_lattice(bs_grid)
    else:
        primary_grid = build_grid(primary_cell_area(cfg.n))
        bs = np.empty((0, 2))

    secondary_grid = build_grid(secondary_cell_area(m))

    primary_pairs = (
        pair_random(primary, substream_seed(seed, _STREAM_PRIMARY_PAIRS))
        if primary.count >= 2 else None
    )
    secondary_pairs = (
        pair_random(secondary, substream_seed(seed, _STREAM_SECONDARY_PAIRS))
        if include_secondary and secondary.count >= 2 else None
    )

    return NetworkInstance(
        config=cfg,
        seed=seed,
        m=m,
        l=l,
        primary=primary,
        secondary=secondary,
        bs_positions=bs,
        primary_pairs=primary_pairs,
        secondary_pairs=secondary_pairs,
        primary_grid=primary_grid,
        secondary_grid=secondary_grid,
        bs_grid=bs_grid,
    )
