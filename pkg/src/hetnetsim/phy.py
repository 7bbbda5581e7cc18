"""Physical-layer quantities: interference bounds, rate floors, transmit
power, and per-slot SINR evaluation.

The closed-form constants here are worst-case bounds, not averages.
Interference is summed over rings of concurrently active cells under
the 9-cell reuse pattern; each ring of index t holds at most 8t
transmitters, and every transmitter spends at most the power needed to
reach across twice its own cell diagonal.  The rate floors divide a
worst-case SINR rate by the time-sharing factors of the schedules, so a
simulated slot should essentially never fall below them.

All rates are in bits per second per Hertz (base-2 logarithms).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .deployment import ScalingConfig
from .geometry import CellGrid, CellIndex, Point

# one ninth of the cells transmit at once; rings are 3 cells apart
_RING_GAP_SPARSE = (3, 2)
# every cell transmits at once; rings are adjacent
_RING_GAP_DENSE = (2, 1)


def _ring_tail(alpha: float, gap: int, offset: int, start: float) -> float:
    # closed form of the integral of t * (gap*t - offset)**(-alpha) from start
    u = gap * start - offset
    return (
        u ** (2.0 - alpha) / (alpha - 2.0) + offset * u ** (1.0 - alpha) / (alpha - 1.0)
    ) / gap ** 2


def _ring_series(alpha: float, gap: int, offset: int, prefactor: float, tol: float) -> float:
    """Sum of t * (gap*t - offset)**(-alpha) over t >= 1.

    Sums terms directly until the first omitted term is small, then adds
    the remainder estimated as the mean of its two bracketing integrals.
    The summand decreases, so the estimate is off by at most half of the
    first omitted term; iteration stops once prefactor times that error
    drops below tol.  Near alpha = 2 the direct sum alone would need
    astronomically many terms; the integral correction keeps this cheap.
    """
    if alpha <= 2:
        raise ValueError(f"interference series diverges for alpha={alpha} (need > 2)")
    total = 0.0
    t0 = 1
    chunk = 4096
    while True:
        t = np.arange(t0, t0 + chunk, dtype=np.float64)
        total += float(np.sum(t * (gap * t - offset) ** (-alpha)))
        last = t0 + chunk - 1
        err = 0.5 * last * (gap * last - offset) ** (-alpha)
        if prefactor * err < tol:
            tail_lo = _ring_tail(alpha, gap, offset, float(last + 1))
            tail_hi = _ring_tail(alpha, gap, offset, float(last))
            return total + 0.5 * (tail_lo + tail_hi)
        t0 += chunk


def worst_case_interference_adhoc(power: float, alpha: float, tol: float = 1e-9) -> float:
    """Aggregate interference bound at any receiver when one cell in nine
    is active.  The t-th ring of active cells sits at least 3t-2 half
    diagonals away."""
    gap, offset = _RING_GAP_SPARSE
    prefactor = power * 2.0 ** (alpha / 2.0 + 3.0)
    return prefactor * _ring_series(alpha, gap, offset, prefactor, tol)


def worst_case_interference_infra(power: float, alpha: float, tol: float = 1e-9) -> float:
    """Aggregate interference bound when every cell is active at once, as
    in the infrastructure downlink; rings close up to 2t-1 half
    diagonals."""
    gap, offset = _RING_GAP_DENSE
    prefactor = power * 2.0 ** (alpha / 2.0 + 3.0)
    return prefactor * _ring_series(alpha, gap, offset, prefactor, tol)


def max_secondary_power_fraction(
    power: float, noise: float, delta_loss: float, interference: float
) -> float:
    """Largest secondary-to-primary power ratio that keeps the primary
    rate loss within delta_loss.

    Solves the worst-case rate inequality for the ratio; a zero
    tolerance admits no secondary power at all and returns exactly 0.
    """
    if not 0.0 <= delta_loss < 1.0:
        raise ValueError(f"delta_loss must lie in [0, 1), got {delta_loss}")
    if power <= 0 or noise <= 0 or interference <= 0:
        raise ValueError("power, noise, and interference must be positive")
    if delta_loss == 0.0:
        return 0.0
    shrunk = (1.0 + power / noise) ** (1.0 - delta_loss) - 1.0
    return (1.0 / shrunk - noise / power) * (power / interference)


@dataclass(frozen=True)
class PhyConstants:
    """Closed-form bounds for one configuration.

    power_fraction is the secondary power ratio actually in force:
    either the configured value or 90% of the admissible maximum.
    """

    interference_adhoc: float
    interference_infra: float
    max_power_fraction: float
    power_fraction: float
    rate_primary_adhoc: float
    rate_secondary_adhoc: float
    rate_primary_infra: float
    rate_secondary_infra_inside: float
    rate_secondary_infra_outside: float

    def to_dict(self) -> dict:
        return {
            "interference_adhoc": self.interference_adhoc,
            "interference_infra": self.interference_infra,
            "max_power_fraction": self.max_power_fraction,
            "power_fraction": self.power_fraction,
            "rate_primary_adhoc": self.rate_primary_adhoc,
            "rate_secondary_adhoc": self.rate_secondary_adhoc,
            "rate_primary_infra": self.rate_primary_infra,
            "rate_secondary_infra_inside": self.rate_secondary_infra_inside,
            "rate_secondary_infra_outside": self.rate_secondary_infra_outside,
        }


def rate_constants(cfg: ScalingConfig, m: float) -> PhyConstants:
    """Worst-case per-hop rate floors for both networks and both models.

    The inside-avoidance secondary floor decreases with m because dense
    deployments sit closer to the base stations they must tolerate.

    Args:
        cfg: scaling configuration; a None power fraction resolves to
            90% of the admissible maximum.
        m: realized secondary density parameter, > 1.

    Raises:
        ValueError: configured power fraction above the admissible
            maximum, or m too small for the density-dependent floor.
    """
    if m <= 1.0:
        raise ValueError(f"secondary density parameter must exceed 1, got {m}")
    p, n0, alpha = cfg.power, cfg.noise, cfg.alpha
    i_adhoc = worst_case_interference_adhoc(p, alpha)
    i_infra = worst_case_interference_infra(p, alpha)
    cap = max_secondary_power_fraction(p, n0, cfg.delta_loss, i_adhoc)
    admissible = min(cap, 1.0)
    if cfg.delta_p is None:
        fraction = 0.9 * admissible
    elif cfg.delta_p > admissible:
        raise ValueError(
            f"delta_p={cfg.delta_p} exceeds the admissible maximum {admissible:.6g}"
        )
    else:
        fraction = cfg.delta_p

    kp = (1.0 / 9.0) * math.log2(1.0 + p / (n0 + i_adhoc))
    # the third denominator term covers the one primary transmitter that
    # may sit inside the same cell neighborhood as the secondary receiver
    ks = (1.0 / 27.0) * math.log2(
        1.0 + fraction * p / (n0 + (1.0 + fraction) * i_adhoc + 2.0 ** (1.5 * alpha) * p)
    )
    kp_infra = math.log2(1.0 + p / (n0 + i_infra))
    # inside an avoidance region the dominant interferer is the base
    # station at the region's center, a distance that shrinks with m
    bs_term_inside = p * (2.0 * math.log(m) / (cfg.beta * cfg.delta_a)) ** (alpha / 2.0)
    bs_term_outside = p * (2.0 / cfg.delta_a) ** (alpha / 2.0)
    cross = n0 + i_infra + fraction * i_adhoc
    ks1 = (cfg.delta_t / 18.0) * math.log2(1.0 + fraction * p / (cross + bs_term_inside))
    ks2 = ((1.0 - cfg.delta_t) / 18.0) * math.log2(1.0 + fraction * p / (cross + bs_term_outside))

    return PhyConstants(
        interference_adhoc=i_adhoc,
        interference_infra=i_infra,
        max_power_fraction=cap,
        power_fraction=fraction,
        rate_primary_adhoc=kp,
        rate_secondary_adhoc=ks,
        rate_primary_infra=kp_infra,
        rate_secondary_infra_inside=ks1,
        rate_secondary_infra_outside=ks2,
    )


@dataclass(frozen=True)
class SlotSchedule:
    """9-cell spatial reuse pattern over a grid.

    Cells whose column and row indices agree modulo 3 share a phase, so
    active cells are always 3 apart and no two adjacent cells transmit
    together.  Secondary slots repeat each packet secondary_repeat
    times; under the infrastructure model phase_split is the fraction of
    secondary time granted to transmitters inside avoidance regions.
    """

    grid: CellGrid
    secondary_repeat: int = 3
    phase_split: Optional[float] = None

    num_phases = 9

    def phase_of(self, cell: CellIndex) -> int:
        return (cell.col % 3) + 3 * (cell.row % 3)

    def cells_in_phase(self, phase: int) -> list[CellIndex]:
        if not 0 <= phase < self.num_phases:
            raise ValueError(f"phase must lie in [0, 9), got {phase}")
        s = self.grid.cells_per_side
        return [
            CellIndex(col, row)
            for row in range(phase // 3, s, 3)
            for col in range(phase % 3, s, 3)
        ]


def schedule_9tdma(
    grid: CellGrid, secondary_repeat: int = 3, phase_split: Optional[float] = None
) -> SlotSchedule:
    if secondary_repeat < 1:
        raise ValueError(f"secondary_repeat must be >= 1, got {secondary_repeat}")
    return SlotSchedule(grid=grid, secondary_repeat=secondary_repeat, phase_split=phase_split)


class NodeKind(enum.Enum):
    PRIMARY = "primary"
    SECONDARY = "secondary"


class PowerAssignment(NamedTuple):
    watts: float
    clamped: bool


def tx_power(
    distance: float,
    kind: NodeKind,
    cfg: ScalingConfig,
    power_fraction: Optional[float] = None,
) -> PowerAssignment:
    """Distance-proportional transmit power, capped at the budget.

    Primary nodes and base stations spend power ~ distance**alpha so the
    received power is constant; secondary nodes scale that law down by
    the admissible fraction.  The fraction must be supplied (or already
    resolved on the config) for secondary transmitters.
    """
    if distance < 0:
        raise ValueError(f"distance must be nonnegative, got {distance}")
    want = cfg.power * distance ** cfg.alpha
    if kind is NodeKind.SECONDARY:
        fraction = power_fraction if power_fraction is not None else cfg.delta_p
        if fraction is None:
            raise ValueError("secondary power fraction is unresolved")
        want *= fraction
    if want > cfg.power:
        return PowerAssignment(cfg.power, True)
    return PowerAssignment(want, False)


@dataclass
class LinkSample:
    """One link's outcome in one slot."""

    tx: Point
    rx: Point
    power: float
    sinr: float
    rate: float


def slot_rates(
    tx_xy: np.ndarray,
    rx_xy: np.ndarray,
    powers: np.ndarray,
    noise: float,
    alpha: float,
) -> tuple[np.ndarray, np.ndarray]:
    """SINR and Shannon rate for every link of one slot.

    All links interfere with each other; link i's interference sums the
    received power from every other transmitter k != i.  Co-located
    distinct transmitter/receiver pairs contribute unbounded
    interference, which resolves to zero SINR; a zero-length link itself
    is rejected.
    """
    tx_xy = np.asarray(tx_xy, dtype=np.float64)
    rx_xy = np.asarray(rx_xy, dtype=np.float64)
    powers = np.asarray(powers, dtype=np.float64)
    count = tx_xy.shape[0]
    if count == 0:
        return np.empty(0), np.empty(0)
    diff = rx_xy[:, None, :] - tx_xy[None, :, :]
    dist = np.sqrt(np.einsum("ikj,ikj->ik", diff, diff))
    link_d = np.diagonal(dist)
    if np.any(link_d == 0.0):
        raise ValueError("zero-length link: transmitter and receiver are co-located")
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = dist ** (-alpha)
        received = powers[None, :] * gain
    received = np.where(powers[None, :] == 0.0, 0.0, received)  # silent nodes, even co-located
    signal = np.diagonal(received).copy()
    np.fill_diagonal(received, 0.0)
    interference = received.sum(axis=1)
    sinr = signal / (noise + interference)
    return sinr, np.log2(1.0 + sinr)


def evaluate_slot(
    links: Sequence[tuple[Point, Point, float]], cfg: ScalingConfig
) -> list[LinkSample]:
    """Evaluate one slot's links under mutual interference.

    Args:
        links: (transmitter, receiver, watts) triples, all concurrently
            active.
        cfg: supplies noise floor and path-loss exponent.

    Returns:
        LinkSample per input link, same order.
    """
    if not links:
        return []
    tx_xy = np.array([(t.x, t.y) for t, _, _ in links])
    rx_xy = np.array([(r.x, r.y) for _, r, _ in links])
    powers = np.array([w for _, _, w in links])
    sinr, rate = slot_rates(tx_xy, rx_xy, powers, cfg.noise, cfg.alpha)
    return [
        LinkSample(tx=links[i][0], rx=links[i][1], power=float(powers[i]),
                   sinr=float(sinr[i]), rate=float(rate[i]))
        for i in range(len(links))
    ]
