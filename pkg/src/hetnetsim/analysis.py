"""Trial orchestration and empirical verification.

One trial is: deploy both networks, build the protected regions, route
every source-destination pair, then run a slotted simulation in which
each cell serves its queued links round-robin under the 9-cell reuse
pattern.  The accounting layer turns per-slot rates into per-pair and
network-wide throughput, and the verification layer compares every
measured quantity against its closed-form bound.

Memory stays flat in the pair count: routes are folded into per-cell
counters and truncated link queues as they are produced, never stored
wholesale.  A cell's queue only needs as many links as the round-robin
can reach within the simulated frames.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

import numpy as np

from .deployment import (
    Model,
    NetworkInstance,
    ScalingConfig,
    deploy,
    derive_densities,
    secondary_cell_area,
)
from .geometry import CellGrid, NodeSet, Point, cells_of, substream_seed
from .phy import (
    NodeKind,
    PhyConstants,
    rate_constants,
    slot_rates,
    tx_power,
)
from .regions import (
    RegionKind,
    RegionSet,
    bordering_mask,
    build_avoidance_regions,
    build_preservation_regions,
    build_region_set,
    cluster_components,
)
from .routing import (
    Pair,
    RoutePath,
    RouteStatus,
    primary_route,
    primary_route_infra,
    secondary_route_adhoc,
    secondary_route_infra,
)

SCHEMA_VERSION = 1
DEFAULT_FRAMES = 8
ADHOC_FRAME_SLOTS = 27   # 9 primary phases x 3 secondary repeats
DL_SUBSLOTS = 18         # 9 inside-region phases + 9 outside phases
UL_SUBSLOTS = 9


def poisson_tail(lam: float, x: float) -> float:
    """Chernoff-style bound on P(Poisson(lam) >= x), valid above the mean.

    Evaluated in log space so large x never overflows.
    """
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    if x <= lam:
        raise ValueError(f"tail bound requires x > lam, got x={x}, lam={lam}")
    return math.exp(-lam + x * (1.0 + math.log(lam) - math.log(x)))


def empty_cell_fraction(nodes: NodeSet, grid: CellGrid) -> float:
    """Fraction of grid cells containing no node."""
    s = grid.cells_per_side
    occupied = np.zeros(s * s, dtype=bool)
    if nodes.count:
        idx = cells_of(nodes.positions, grid)
        occupied[idx[:, 1] * s + idx[:, 0]] = True
    return 1.0 - float(occupied.sum()) / (s * s)


# ---------------------------------------------------------------------------
# closed-form bounds


def primary_load_bound_adhoc(n: float) -> float:
    return 4.0 * math.sqrt(2.0 * n * math.log(n))


def primary_load_bound_infra(n: float, gamma: float) -> float:
    return 2.0 * n ** (1.0 - gamma)


def secondary_load_bound(m: float) -> float:
    return 4.0 * math.sqrt(2.0 * m * math.log(m))


def secondary_load_bound_inside(m: float, beta: float, gamma: float, delta_a: float) -> float:
    return 2.0 * math.sqrt(2.0 * delta_a * m ** (1.0 - gamma / beta) * math.log(m))


def region_outage_bound(m: float, beta: float, epsilon: float, max_cluster: int) -> float:
    """Unserved-pair fraction due to endpoints or walls of preservation
    regions, in terms of the worst observed cluster size."""
    growth = (1.0 + epsilon) / (1.0 - epsilon)
    cluster = (math.pi + 4.0 * max_cluster) / math.pi
    return 72.0 * growth * cluster * math.log(m) / m ** (1.0 - 1.0 / beta)


def avoidance_outage_bound(m: float, beta: float, epsilon: float, delta_a: float) -> float:
    """Extra unserved fraction from endpoints inside avoidance regions."""
    return 4.0 * beta * delta_a / ((1.0 - epsilon) * math.log(m))


def loaded_fraction_bound(m: float, beta: float, epsilon: float, shift_stretch: float = 0.0) -> float:
    """Fraction of served paths that cross a loaded cell; only decays for
    beta > 4/3.  shift_stretch adds the infrastructure-model detour
    factor and is 0 in the ad hoc model."""
    growth = (1.0 + epsilon) / (1.0 - epsilon)
    return (
        40.0 * math.sqrt(2.0) * (1.0 + shift_stretch) * growth
        * math.sqrt(math.log(m)) / m ** (1.5 - 2.0 / beta)
    )


# ---------------------------------------------------------------------------
# result containers


@dataclass
class BoundCheck:
    """One measured quantity against its closed-form bound."""

    name: str
    bound: float
    observed: float
    passed: bool
    voided: bool = False   # realized node count strayed; excluded from aggregation
    vacuous: bool = False  # nothing in scope this trial
    max_cluster_size: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "bound": self.bound,
            "observed": self.observed,
            "passed": self.passed,
            "voided": self.voided,
            "vacuous": self.vacuous,
            "max_cluster_size": self.max_cluster_size,
        }


@dataclass
class ThroughputReport:
    """Network-wide throughput of one trial.

    Sum throughput is the bottleneck pair rate times the served pair
    count: the fair-share figure every served pair can sustain at once.
    t_alone/s_alone rerun the primary accounting with the secondary
    network silent.
    """

    t_primary: float
    s_primary: float
    t_alone: float
    s_alone: float
    t_secondary: float
    s_secondary: float
    mean_primary_rate: float
    mean_secondary_rate: float
    primary_pairs: int
    served_secondary: int
    total_secondary: int
    degenerate_primary: bool
    degenerate_secondary: bool

    def to_dict(self) -> dict:
        return {
            "t_primary": self.t_primary,
            "s_primary": self.s_primary,
            "t_alone": self.t_alone,
            "s_alone": self.s_alone,
            "t_secondary": self.t_secondary,
            "s_secondary": self.s_secondary,
            "mean_primary_rate": self.mean_primary_rate,
            "mean_secondary_rate": self.mean_secondary_rate,
            "primary_pairs": self.primary_pairs,
            "served_secondary": self.served_secondary,
            "total_secondary": self.total_secondary,
            "degenerate_primary": self.degenerate_primary,
            "degenerate_secondary": self.degenerate_secondary,
        }


@dataclass
class TrialResult:
    """Everything measured in one seeded trial."""

    config: ScalingConfig
    seed: int
    m: float
    l: int
    realized_primary: int
    realized_secondary: int
    empty_primary_cell_fraction: float
    region_stats: dict
    loads: dict
    floors: dict
    counters: dict
    report: ThroughputReport
    epsilon_s: Optional[float]
    loaded_path_fraction: Optional[float]
    max_secondary_interference: float
    phy: PhyConstants
    checks: list = field(default_factory=list)
    trace: Optional[list] = None
    cell_loads: Optional[list] = None

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "seed": self.seed,
            "m": self.m,
            "l": self.l,
            "realized_primary": self.realized_primary,
            "realized_secondary": self.realized_secondary,
            "empty_primary_cell_fraction": self.empty_primary_cell_fraction,
            "region_stats": self.region_stats,
            "loads": self.loads,
            "floors": {k: list(v) for k, v in self.floors.items()},
            "counters": self.counters,
            "report": self.report.to_dict(),
            "epsilon_s": self.epsilon_s,
            "loaded_path_fraction": self.loaded_path_fraction,
            "max_secondary_interference": self.max_secondary_interference,
            "phy": self.phy.to_dict(),
            "checks": [c.to_dict() for c in self.checks],
        }


def outage_fraction(routes: Iterable[RoutePath]) -> float:
    """Fraction of pairs not served, over all pairs."""
    total = 0
    unserved = 0
    for r in routes:
        total += 1
        if r.status is not RouteStatus.SERVED:
            unserved += 1
    if total == 0:
        raise ValueError("outage fraction undefined with zero pairs")
    return unserved / total


# ---------------------------------------------------------------------------
# traffic folding: routes -> per-cell queues and counters


def _relay_table(positions: np.ndarray, grid: CellGrid) -> tuple[np.ndarray, np.ndarray]:
    """Designated relay per cell: the node nearest the cell center.

    Cells without nodes fall back to their geometric center; the caller
    counts how often such a virtual relay is actually used.
    """
    s = grid.cells_per_side
    side = grid.cell_side
    cols, rows = np.meshgrid(np.arange(s), np.arange(s))
    centers = np.stack(
        [(cols.ravel() + 0.5) * side, (rows.ravel() + 0.5) * side], axis=1
    )
    relay = centers.copy()
    has = np.zeros(s * s, dtype=bool)
    if positions.shape[0]:
        idx = cells_of(positions, grid)
        flat = idx[:, 1] * s + idx[:, 0]
        d2 = np.sum((positions - centers[flat]) ** 2, axis=1)
        order = np.argsort(-d2, kind="stable")  # nearest node written last wins
        relay[flat[order]] = positions[order]
        has[flat] = True
    return relay, has


@dataclass
class _Traffic:
    """Folded routing state of one network on one grid."""

    counts: np.ndarray                  # (s*s,) served paths touching each cell
    tx_counts: np.ndarray               # (s*s,) links transmitted from each cell
    queues: list                        # per cell: [(txx, txy, rxx, rxy, watts), ...]
    pair_cells: list                    # per served pair: flat cells that transmit for it
    served: int = 0
    unserved_in_region: int = 0
    unserved_disconnected: int = 0
    loaded_touches: int = 0
    detoured: int = 0
    nudged: int = 0
    empty_relay_links: int = 0
    clamped_links: int = 0

    @classmethod
    def empty(cls, num_cells: int) -> "_Traffic":
        return cls(
            counts=np.zeros(num_cells, dtype=np.int64),
            tx_counts=np.zeros(num_cells, dtype=np.int64),
            queues=[[] for _ in range(num_cells)],
            pair_cells=[],
        )

    @property
    def total(self) -> int:
        return self.served + self.unserved_in_region + self.unserved_disconnected


def _fold_route(
    traffic: _Traffic,
    route: RoutePath,
    src: Point,
    dst: Point,
    relay_xy: np.ndarray,
    relay_has: np.ndarray,
    s: int,
    cfg: ScalingConfig,
    kind: NodeKind,
    fraction: Optional[float],
    cap: int,
    loaded_flat: Optional[np.ndarray],
) -> None:
    """Fold one served route into counters and link queues."""
    hops = route.hops
    touched = np.empty(len(hops) + 1, dtype=np.int32)
    touched[0] = hops[0].from_cell.row * s + hops[0].from_cell.col
    for i, h in enumerate(hops):
        touched[i + 1] = h.to_cell.row * s + h.to_cell.col
    cells = np.unique(touched)
    traffic.counts[cells] += 1
    # the final cell only receives; the pair's rate is bottlenecked by
    # the cells that spend transmission time on it, each divided by the
    # links (with multiplicity) in that cell's round-robin
    np.add.at(traffic.tx_counts, touched[:-1], 1)
    traffic.pair_cells.append(np.unique(touched[:-1]))
    if loaded_flat is not None and bool(loaded_flat[cells].any()):
        traffic.loaded_touches += 1

    # the true endpoints transmit/receive themselves; interior hops use
    # the per-cell relay
    prev = (src.x, src.y)
    last = len(hops) - 1
    for i, h in enumerate(hops):
        to_flat = int(touched[i + 1])
        if i == last:
            nxt = (dst.x, dst.y)
        else:
            nxt = (float(relay_xy[to_flat, 0]), float(relay_xy[to_flat, 1]))
            if not relay_has[to_flat]:
                traffic.empty_relay_links += 1
        from_flat = int(touched[i])
        queue = traffic.queues[from_flat]
        if len(queue) < cap:
            dist = math.hypot(nxt[0] - prev[0], nxt[1] - prev[1])
            watts, clamped = tx_power(dist, kind, cfg, fraction)
            if clamped:
                traffic.clamped_links += 1
            queue.append((prev[0], prev[1], nxt[0], nxt[1], watts))
        prev = nxt


def _secondary_traffic(
    instance: NetworkInstance,
    cfg: ScalingConfig,
    fraction: float,
    obstacles: RegionSet,
    avoidance: Optional[RegionSet],
    cap: int,
) -> _Traffic:
    grid = instance.secondary_grid
    s = grid.cells_per_side
    traffic = _Traffic.empty(s * s)
    pairs = instance.secondary_pairs
    if pairs is None:
        return traffic
    relay_xy, relay_has = _relay_table(instance.secondary.positions, grid)
    loaded_flat = bordering_mask(obstacles).ravel()
    for i in range(pairs.num_pairs):
        pair = Pair(
            i,
            instance.secondary.point(int(pairs.sources[i])),
            instance.secondary.point(int(pairs.dests[i])),
        )
        if avoidance is None:
            route = secondary_route_adhoc(pair, instance, obstacles)
        else:
            route = secondary_route_infra(pair, instance, obstacles, avoidance)
        if route.status is RouteStatus.UNSERVED_IN_REGION:
            traffic.unserved_in_region += 1
            continue
        if route.status is RouteStatus.UNSERVED_DISCONNECTED:
            traffic.unserved_disconnected += 1
            continue
        traffic.served += 1
        traffic.detoured += int(route.detoured)
        traffic.nudged += int(route.nudged)
        _fold_route(
            traffic, route, pair.src, pair.dst, relay_xy, relay_has, s,
            cfg, NodeKind.SECONDARY, fraction, cap, loaded_flat,
        )
    return traffic


def _primary_traffic_adhoc(instance: NetworkInstance, cfg: ScalingConfig, cap: int) -> _Traffic:
    grid = instance.primary_grid
    s = grid.cells_per_side
    traffic = _Traffic.empty(s * s)
    pairs = instance.primary_pairs
    if pairs is None:
        return traffic
    relay_xy, relay_has = _relay_table(instance.primary.positions, grid)
    for i in range(pairs.num_pairs):
        pair = Pair(
            i,
            instance.primary.point(int(pairs.sources[i])),
            instance.primary.point(int(pairs.dests[i])),
        )
        route = primary_route(pair, grid)
        traffic.served += 1
        _fold_route(
            traffic, route, pair.src, pair.dst, relay_xy, relay_has, s,
            cfg, NodeKind.PRIMARY, None, cap, None,
        )
    return traffic


@dataclass
class _InfraPrimaryTraffic:
    """Uplink and downlink single-hop traffic per base-station cell."""

    ul_counts: np.ndarray
    dl_counts: np.ndarray
    ul_queues: list
    dl_queues: list
    pair_src: np.ndarray  # flat source cell per pair
    pair_dst: np.ndarray
    clamped_links: int = 0


def _primary_traffic_infra(instance: NetworkInstance, cfg: ScalingConfig) -> _InfraPrimaryTraffic:
    grid = instance.primary_grid
    s = grid.cells_per_side
    num = s * s
    traffic = _InfraPrimaryTraffic(
        ul_counts=np.zeros(num, dtype=np.int64),
        dl_counts=np.zeros(num, dtype=np.int64),
        ul_queues=[[] for _ in range(num)],
        dl_queues=[[] for _ in range(num)],
        pair_src=np.empty(0, dtype=np.int64),
        pair_dst=np.empty(0, dtype=np.int64),
    )
    pairs = instance.primary_pairs
    if pairs is None:
        return traffic
    n_pairs = pairs.num_pairs
    traffic.pair_src = np.empty(n_pairs, dtype=np.int64)
    traffic.pair_dst = np.empty(n_pairs, dtype=np.int64)
    for i in range(n_pairs):
        pair = Pair(
            i,
            instance.primary.point(int(pairs.sources[i])),
            instance.primary.point(int(pairs.dests[i])),
        )
        uplink, downlink = primary_route_infra(pair, instance)
        up_flat = uplink.dest_cell.row * s + uplink.dest_cell.col
        dn_flat = downlink.source_cell.row * s + downlink.source_cell.col
        traffic.pair_src[i] = up_flat
        traffic.pair_dst[i] = dn_flat
        traffic.ul_counts[up_flat] += 1
        traffic.dl_counts[dn_flat] += 1
        bs_up = instance.bs_positions[up_flat]
        bs_dn = instance.bs_positions[dn_flat]
        d_up = math.hypot(pair.src.x - bs_up[0], pair.src.y - bs_up[1])
        d_dn = math.hypot(pair.dst.x - bs_dn[0], pair.dst.y - bs_dn[1])
        w_up, c_up = tx_power(d_up, NodeKind.PRIMARY, cfg, None)
        w_dn, c_dn = tx_power(d_dn, NodeKind.PRIMARY, cfg, None)
        traffic.clamped_links += int(c_up) + int(c_dn)
        traffic.ul_queues[up_flat].append((pair.src.x, pair.src.y, float(bs_up[0]), float(bs_up[1]), w_up))
        traffic.dl_queues[dn_flat].append((float(bs_dn[0]), float(bs_dn[1]), pair.dst.x, pair.dst.y, w_dn))
    return traffic


# ---------------------------------------------------------------------------
# slotted simulation


@dataclass
class _SlotStats:
    """Per-cell effective rates and floor tallies from the slot loop."""

    primary_eff: np.ndarray        # includes the schedule's time factors
    alone_eff: np.ndarray
    secondary_eff: Optional[np.ndarray]
    ul_eff: Optional[np.ndarray] = None       # infrastructure, raw per-slot means
    dl_eff: Optional[np.ndarray] = None
    ul_alone_eff: Optional[np.ndarray] = None
    dl_alone_eff: Optional[np.ndarray] = None
    floors: dict = field(default_factory=dict)
    max_secondary_interference: float = 0.0
    trace: Optional[list] = None


def _phase_lists(queues: list, s: int) -> list:
    """Cells with pending links, grouped by 9-TDMA phase."""
    groups: list = [[] for _ in range(9)]
    for flat, q in enumerate(queues):
        if q:
            col, row = flat % s, flat // s
            groups[(col % 3) + 3 * (row % 3)].append(flat)
    return groups


def _gather(queues: list, cells: list, index: int) -> list:
    return [queues[c][index % len(queues[c])] for c in cells]


def _interference_at(
    rx_xy: np.ndarray, tx_xy: np.ndarray, powers: np.ndarray, alpha: float
) -> np.ndarray:
    diff = rx_xy[:, None, :] - tx_xy[None, :, :]
    dist = np.sqrt(np.einsum("ikj,ikj->ik", diff, diff))
    with np.errstate(divide="ignore"):
        gain = dist ** (-alpha)
    contrib = np.where(powers[None, :] == 0.0, 0.0, powers[None, :] * gain)
    return contrib.sum(axis=1)


def _tally(floors: dict, name: str, violations: int, samples: int) -> None:
    bucket = floors.setdefault(name, [0, 0])
    bucket[0] += violations
    bucket[1] += samples


def _simulate_adhoc(
    cfg: ScalingConfig,
    phy: PhyConstants,
    primary: _Traffic,
    secondary: _Traffic,
    s_p: int,
    s_m: int,
    frames: int,
    trace: bool,
) -> _SlotStats:
    """27-slot frames: the primary phase advances every slot while each
    secondary phase holds for 3 consecutive slots, repeating one packet
    against three different primary interference patterns."""
    p_sum = np.zeros(s_p * s_p)
    p_cnt = np.zeros(s_p * s_p, dtype=np.int64)
    a_sum = np.zeros(s_p * s_p)
    s_sum = np.zeros(s_m * s_m)
    s_cnt = np.zeros(s_m * s_m, dtype=np.int64)
    floors: dict = {}
    max_int = 0.0
    rows: Optional[list] = [] if trace else None

    p_phases = _phase_lists(primary.queues, s_p)
    s_phases = _phase_lists(secondary.queues, s_m)
    kp = phy.rate_primary_adhoc
    ks = phy.rate_secondary_adhoc

    for f in range(frames):
        best: dict = {}
        for j in range(ADHOC_FRAME_SLOTS):
            p_cells = p_phases[j % 9]
            s_cells = s_phases[j // 3]
            p_links = _gather(primary.queues, p_cells, 3 * f + j // 9)
            s_links = _gather(secondary.queues, s_cells, f)
            links = p_links + s_links
            if not links:
                continue
            arr = np.asarray(links)
            tx, rx, w = arr[:, 0:2], arr[:, 2:4], arr[:, 4]
            _, rate = slot_rates(tx, rx, w, cfg.noise, cfg.alpha)
            np_count = len(p_links)
            p_rates = rate[:np_count]
            s_rates = rate[np_count:]

            if np_count:
                if s_links:
                    _, alone = slot_rates(tx[:np_count], rx[:np_count], w[:np_count],
                                          cfg.noise, cfg.alpha)
                    sec_at_p = _interference_at(rx[:np_count], tx[np_count:],
                                                w[np_count:], cfg.alpha)
                    max_int = max(max_int, float(sec_at_p.max()))
                else:
                    alone = p_rates
                cells = np.asarray(p_cells, dtype=np.int64)
                p_sum[cells] += p_rates
                a_sum[cells] += alone
                p_cnt[cells] += 1
                _tally(floors, "rate_floor_primary",
                       int(np.sum(p_rates / 9.0 < kp)), np_count)
            for c, r in zip(s_cells, s_rates):
                if r > best.get(c, -1.0):
                    best[c] = r
            if rows is not None:
                for c, r in zip(p_cells, p_rates):
                    rows.append((f, j, "primary", c % s_p, c // s_p, float(r)))
                for c, r in zip(s_cells, s_rates):
                    rows.append((f, j, "secondary", c % s_m, c // s_m, float(r)))
        for c, b in best.items():
            s_sum[c] += b
            s_cnt[c] += 1
        if best:
            vals = np.fromiter(best.values(), dtype=np.float64)
            _tally(floors, "rate_floor_secondary",
                   int(np.sum(vals / ADHOC_FRAME_SLOTS < ks)), len(vals))

    with np.errstate(invalid="ignore"):
        primary_eff = np.where(p_cnt > 0, p_sum / np.maximum(p_cnt, 1) / 9.0, 0.0)
        alone_eff = np.where(p_cnt > 0, a_sum / np.maximum(p_cnt, 1) / 9.0, 0.0)
        secondary_eff = np.where(
            s_cnt > 0, s_sum / np.maximum(s_cnt, 1) / ADHOC_FRAME_SLOTS, 0.0
        )
    return _SlotStats(
        primary_eff=primary_eff,
        alone_eff=alone_eff,
        secondary_eff=secondary_eff,
        floors=floors,
        max_secondary_interference=max_int,
        trace=rows,
    )


def _simulate_infra(
    cfg: ScalingConfig,
    phy: PhyConstants,
    primary: _InfraPrimaryTraffic,
    secondary: _Traffic,
    avoidance_flat: np.ndarray,
    s_p: int,
    s_m: int,
    frames: int,
    trace: bool,
) -> _SlotStats:
    """Frames of 18 downlink subslots then 9 uplink subslots.

    Every base station with pending traffic transmits in every downlink
    subslot, advancing its own round-robin; secondary cells inside
    avoidance regions ride the first 9 subslots and the rest ride the
    last 9, one subslot per frame each under their own 9-TDMA pattern.
    The uplink half carries no secondary traffic.  Time-share factors
    are applied at accounting, so the two primary rate arrays stay raw.
    """
    num_p = s_p * s_p
    dl_sum = np.zeros(num_p)
    dl_cnt = np.zeros(num_p, dtype=np.int64)
    dl_alone_sum = np.zeros(num_p)
    ul_sum = np.zeros(num_p)
    ul_cnt = np.zeros(num_p, dtype=np.int64)
    s_sum = np.zeros(s_m * s_m)
    s_cnt = np.zeros(s_m * s_m, dtype=np.int64)
    floors: dict = {}
    max_int = 0.0
    rows: Optional[list] = [] if trace else None

    dl_active = [c for c in range(num_p) if primary.dl_queues[c]]
    ul_active = [c for c in range(num_p) if primary.ul_queues[c]]
    inside_phases: list = [[] for _ in range(9)]
    outside_phases: list = [[] for _ in range(9)]
    for flat, q in enumerate(secondary.queues):
        if q:
            col, row = flat % s_m, flat // s_m
            phase = (col % 3) + 3 * (row % 3)
            (inside_phases if avoidance_flat[flat] else outside_phases)[phase].append(flat)

    kp = phy.rate_primary_infra
    ks1 = phy.rate_secondary_infra_inside
    ks2 = phy.rate_secondary_infra_outside
    w1 = cfg.delta_t / DL_SUBSLOTS
    w2 = (1.0 - cfg.delta_t) / DL_SUBSLOTS

    for f in range(frames):
        for t in range(DL_SUBSLOTS):
            inside = t < 9
            s_cells = (inside_phases if inside else outside_phases)[t % 9]
            p_links = _gather(primary.dl_queues, dl_active, DL_SUBSLOTS * f + t)
            s_links = _gather(secondary.queues, s_cells, f)
            links = p_links + s_links
            if not links:
                continue
            arr = np.asarray(links)
            tx, rx, w = arr[:, 0:2], arr[:, 2:4], arr[:, 4]
            _, rate = slot_rates(tx, rx, w, cfg.noise, cfg.alpha)
            np_count = len(p_links)
            p_rates = rate[:np_count]
            s_rates = rate[np_count:]
            if np_count:
                if s_links:
                    _, alone = slot_rates(tx[:np_count], rx[:np_count], w[:np_count],
                                          cfg.noise, cfg.alpha)
                    sec_at_p = _interference_at(rx[:np_count], tx[np_count:],
                                                w[np_count:], cfg.alpha)
                    max_int = max(max_int, float(sec_at_p.max()))
                else:
                    alone = p_rates
                cells = np.asarray(dl_active, dtype=np.int64)
                dl_sum[cells] += p_rates
                dl_alone_sum[cells] += alone
                dl_cnt[cells] += 1
                _tally(floors, "rate_floor_downlink",
                       int(np.sum(p_rates < kp)), np_count)
            if s_links:
                factor = w1 if inside else w2
                floor = ks1 if inside else ks2
                name = "rate_floor_secondary_inside" if inside else "rate_floor_secondary_outside"
                cells = np.asarray(s_cells, dtype=np.int64)
                s_sum[cells] += factor * s_rates
                s_cnt[cells] += 1
                _tally(floors, name, int(np.sum(factor * s_rates < floor)), len(s_links))
            if rows is not None:
                for c, r in zip(dl_active, p_rates):
                    rows.append((f, t, "downlink", c % s_p, c // s_p, float(r)))
                for c, r in zip(s_cells, s_rates):
                    rows.append((f, t, "secondary", c % s_m, c // s_m, float(r)))
        for u in range(UL_SUBSLOTS):
            p_links = _gather(primary.ul_queues, ul_active, UL_SUBSLOTS * f + u)
            if not p_links:
                continue
            arr = np.asarray(p_links)
            tx, rx, w = arr[:, 0:2], arr[:, 2:4], arr[:, 4]
            _, rate = slot_rates(tx, rx, w, cfg.noise, cfg.alpha)
            cells = np.asarray(ul_active, dtype=np.int64)
            ul_sum[cells] += rate
            ul_cnt[cells] += 1
            _tally(floors, "rate_floor_uplink", int(np.sum(rate < kp)), len(p_links))
            if rows is not None:
                for c, r in zip(ul_active, rate):
                    rows.append((f, DL_SUBSLOTS + u, "uplink", c % s_p, c // s_p, float(r)))

    with np.errstate(invalid="ignore"):
        dl_eff = np.where(dl_cnt > 0, dl_sum / np.maximum(dl_cnt, 1), 0.0)
        dl_alone = np.where(dl_cnt > 0, dl_alone_sum / np.maximum(dl_cnt, 1), 0.0)
        ul_eff = np.where(ul_cnt > 0, ul_sum / np.maximum(ul_cnt, 1), 0.0)
        secondary_eff = np.where(s_cnt > 0, s_sum / np.maximum(s_cnt, 1), 0.0)
    return _SlotStats(
        primary_eff=dl_eff,
        alone_eff=dl_alone,
        secondary_eff=secondary_eff,
        ul_eff=ul_eff,
        dl_eff=dl_eff,
        ul_alone_eff=ul_eff,
        dl_alone_eff=dl_alone,
        floors=floors,
        max_secondary_interference=max_int,
        trace=rows,
    )


# ---------------------------------------------------------------------------
# throughput accounting


def _pair_rates(pair_cells: list, eff: np.ndarray, tx_counts: np.ndarray) -> np.ndarray:
    """Bottleneck rate per served pair: the worst transmitting cell on the
    path grants the pair an equal share of its effective rate."""
    out = np.empty(len(pair_cells))
    for i, cells in enumerate(pair_cells):
        out[i] = float(np.min(eff[cells] / tx_counts[cells]))
    return out


def measure_throughput(
    primary_rates: np.ndarray,
    alone_rates: np.ndarray,
    secondary_rates: np.ndarray,
    total_secondary: int,
) -> ThroughputReport:
    """Reduce per-pair rates to the uniform-rate network figures.

    Throughput T is the worst served pair's rate; sum throughput S is
    T times the served pair count, the total traffic the network moves
    when every served pair is granted the same rate.
    """
    deg_p = primary_rates.size == 0
    deg_s = secondary_rates.size == 0
    t_p = 0.0 if deg_p else float(primary_rates.min())
    t_a = 0.0 if alone_rates.size == 0 else float(alone_rates.min())
    t_s = 0.0 if deg_s else float(secondary_rates.min())
    return ThroughputReport(
        t_primary=t_p,
        s_primary=t_p * primary_rates.size,
        t_alone=t_a,
        s_alone=t_a * alone_rates.size,
        t_secondary=t_s,
        s_secondary=t_s * secondary_rates.size,
        mean_primary_rate=0.0 if deg_p else float(primary_rates.mean()),
        mean_secondary_rate=0.0 if deg_s else float(secondary_rates.mean()),
        primary_pairs=int(primary_rates.size),
        served_secondary=int(secondary_rates.size),
        total_secondary=total_secondary,
        degenerate_primary=deg_p,
        degenerate_secondary=deg_s,
    )


# ---------------------------------------------------------------------------
# bound verification


def verify_bounds(trial: TrialResult) -> list[BoundCheck]:
    """Every closed-form bound against this trial's measurements.

    Checks whose population-level premise failed (realized node counts
    off by more than the concentration slack epsilon) are marked voided;
    checks with nothing in scope are vacuous passes.  Lower bounds are
    phrased as a ratio that must stay at or below 1.
    """
    cfg = trial.config
    n, m = cfg.n, trial.m
    infra = cfg.model is Model.INFRASTRUCTURE
    has_secondary = trial.realized_secondary > 0 or trial.epsilon_s is not None
    void_p = abs(trial.realized_primary - n) > cfg.epsilon * n
    void_s = has_secondary and abs(trial.realized_secondary - m) > cfg.epsilon * m
    n_c = trial.region_stats.get("max_cluster", 0)
    checks: list[BoundCheck] = []

    def add(name: str, bound: float, observed: float, voided: bool = False,
            vacuous: bool = False, cluster: Optional[int] = None) -> None:
        checks.append(BoundCheck(
            name=name,
            bound=float(bound),
            observed=float(observed),
            passed=bool(vacuous or observed <= bound),
            voided=voided,
            vacuous=vacuous,
            max_cluster_size=cluster,
        ))

    if infra:
        bound = primary_load_bound_infra(n, cfg.gamma)
        add("load_uplink", bound, trial.loads.get("uplink", 0), voided=void_p)
        add("load_downlink", bound, trial.loads.get("downlink", 0), voided=void_p)
    else:
        add("load_primary", primary_load_bound_adhoc(n),
            trial.loads.get("primary", 0), voided=void_p)

    if has_secondary:
        base = secondary_load_bound(m)
        stretch = trial.region_stats.get("shift_stretch", 0.0)
        if infra:
            outside = (1.0 + stretch) * base
            d_a = trial.region_stats.get("realized_delta_a", cfg.delta_a)
            inside = secondary_load_bound_inside(m, cfg.beta, cfg.gamma, d_a)
            add("load_secondary_outside_regular", outside,
                trial.loads.get("secondary_outside_regular", 0), voided=void_s)
            add("load_secondary_outside_loaded", (6 * n_c + 1) * outside,
                trial.loads.get("secondary_outside_loaded", 0),
                voided=void_s, vacuous=n_c == 0, cluster=n_c)
            add("load_secondary_inside_regular", inside,
                trial.loads.get("secondary_inside_regular", 0), voided=void_s)
            add("load_secondary_inside_loaded", (6 * n_c + 1) * inside,
                trial.loads.get("secondary_inside_loaded", 0),
                voided=void_s, vacuous=n_c == 0, cluster=n_c)
        else:
            add("load_secondary_regular", base,
                trial.loads.get("secondary_regular", 0), voided=void_s)
            add("load_secondary_loaded", (6 * n_c + 1) * base,
                trial.loads.get("secondary_loaded", 0),
                voided=void_s, vacuous=n_c == 0, cluster=n_c)

        outage_bound = region_outage_bound(m, cfg.beta, cfg.epsilon, n_c)
        if infra:
            outage_bound += avoidance_outage_bound(m, cfg.beta, cfg.epsilon, cfg.delta_a)
        add("outage", outage_bound,
            trial.epsilon_s if trial.epsilon_s is not None else 0.0,
            voided=void_s, vacuous=trial.epsilon_s is None, cluster=n_c)

        if cfg.beta > 4.0 / 3.0:
            # the infrastructure detour term is 1 + c with c the shift
            # stretch factor 1/(1 - sqrt(delta_a))
            stretch_term = trial.region_stats.get("shift_stretch", 0.0) + 1.0 if infra else 0.0
            add("loaded_path_fraction",
                loaded_fraction_bound(m, cfg.beta, cfg.epsilon, stretch_term),
                trial.loaded_path_fraction if trial.loaded_path_fraction is not None else 0.0,
                voided=void_s, vacuous=trial.loaded_path_fraction is None, cluster=n_c)

        blocked_area = trial.region_stats.get("primary_blocked_area", 0.0)
        add("preservation_area", 9.0 * (1.0 + cfg.epsilon) * n * secondary_cell_area(m),
            blocked_area, voided=void_p)

        interference_ref = trial.phy.interference_infra if infra else trial.phy.interference_adhoc
        add("secondary_interference_at_primary",
            trial.phy.power_fraction * interference_ref,
            trial.max_secondary_interference)

    for name, (viol, total) in sorted(trial.floors.items()):
        add(name, 0.01, viol / total if total else 0.0, vacuous=total == 0)

    rep = trial.report
    if not rep.degenerate_primary and rep.t_alone > 0:
        add("primary_protection", cfg.delta_loss + 0.01, 1.0 - rep.t_primary / rep.t_alone)
        if infra:
            floor = 0.5 * trial.phy.rate_primary_infra / primary_load_bound_infra(n, cfg.gamma)
        else:
            floor = trial.phy.rate_primary_adhoc / primary_load_bound_adhoc(n)
        add("throughput_floor_primary", 1.0, floor / rep.t_alone, voided=void_p)
    else:
        add("primary_protection", cfg.delta_loss + 0.01, 0.0, vacuous=True)
        add("throughput_floor_primary", 1.0, 0.0, vacuous=True)

    if has_secondary:
        if rep.degenerate_secondary or rep.t_secondary <= 0:
            add("throughput_floor_secondary", 1.0, 0.0, vacuous=True, cluster=n_c)
        else:
            if infra:
                d_a = trial.region_stats.get("realized_delta_a", cfg.delta_a)
                stretch = trial.region_stats.get("shift_stretch", 0.0)
                floor = min(
                    trial.phy.rate_secondary_infra_inside
                    / ((6 * n_c + 1) * secondary_load_bound_inside(m, cfg.beta, cfg.gamma, d_a)),
                    trial.phy.rate_secondary_infra_outside
                    / ((6 * n_c + 1) * (1.0 + stretch) * secondary_load_bound(m)),
                )
            else:
                floor = trial.phy.rate_secondary_adhoc / ((6 * n_c + 1) * secondary_load_bound(m))
            add("throughput_floor_secondary", 1.0, floor / rep.t_secondary,
                voided=void_s, cluster=n_c)

    return checks


# ---------------------------------------------------------------------------
# trial driver


def _max_load(counts: np.ndarray, mask: Optional[np.ndarray] = None) -> int:
    if mask is not None:
        counts = counts[mask]
    return int(counts.max()) if counts.size else 0


def simulate_trial(
    cfg: ScalingConfig,
    seed: int,
    frames: int = DEFAULT_FRAMES,
    include_secondary: bool = True,
    trace: bool = False,
    keep_loads: bool = False,
) -> TrialResult:
    """Run one full trial and verify every bound on it.

    Args:
        cfg: scaling configuration (validated here).
        seed: master seed; every sampling step derives its own substream.
        frames: schedule frames to simulate; queues are truncated to the
            links the round-robin can reach in that many frames.
        include_secondary: drop and route the unlicensed network too.
        trace: record per-slot rate rows for export.
        keep_loads: retain the per-cell load table for export.

    Returns:
        TrialResult with measurements, throughput report, and checks.

    Raises:
        ValueError: invalid configuration, or a secondary grid too
            coarse to host preservation regions.
    """
    cfg.validate()
    instance = deploy(cfg, seed, include_secondary=include_secondary)
    phy = rate_constants(cfg, instance.m)
    run_cfg = replace(cfg, delta_p=phy.power_fraction) if cfg.delta_p is None else cfg
    infra = cfg.model is Model.INFRASTRUCTURE
    s_m = instance.secondary_grid.cells_per_side
    s_p = instance.primary_grid.cells_per_side
    have_secondary = include_secondary and instance.secondary.count > 0

    region_stats: dict = {"num_regions": 0, "blocked_cells": 0, "blocked_fraction": 0.0,
                          "max_cluster": 0, "num_clusters": 0,
                          "primary_blocked_area": 0.0}
    counters: dict = {}
    loads: dict = {}

    preservation = avoidance = None
    amask_flat = np.zeros(s_m * s_m, dtype=bool)
    if include_secondary:
        preservation = build_preservation_regions(instance)
        primary_only = build_region_set(
            [r for r in preservation.regions if r.kind is RegionKind.PRESERVE_PRIMARY],
            instance.secondary_grid,
        )
        clusters = cluster_components(primary_only)
        region_stats.update(
            num_regions=len(preservation.regions),
            blocked_cells=preservation.num_blocked,
            blocked_fraction=preservation.num_blocked / (s_m * s_m),
            max_cluster=clusters.max_size,
            num_clusters=len(clusters.clusters),
            primary_blocked_area=primary_only.num_blocked * secondary_cell_area(instance.m),
        )
        if infra:
            avoidance = build_avoidance_regions(instance)
            amask_flat = avoidance.mask.ravel()
            if avoidance.regions:
                k = avoidance.regions[0].half_width
                realized = ((2 * k + 1) ** 2) * instance.secondary_grid.cell_area * instance.l
                region_stats["realized_delta_a"] = realized
                region_stats["shift_stretch"] = (
                    1.0 / (1.0 - math.sqrt(realized)) - 1.0 if realized < 1.0 else 0.0
                )

    if have_secondary:
        straffic = _secondary_traffic(instance, run_cfg, phy.power_fraction,
                                      preservation, avoidance, cap=frames)
    else:
        straffic = _Traffic.empty(s_m * s_m)

    if infra:
        ptraffic = _primary_traffic_infra(instance, run_cfg)
        stats = _simulate_infra(run_cfg, phy, ptraffic, straffic, amask_flat,
                                s_p, s_m, frames, trace)
        pairs = ptraffic.pair_src.size
        if pairs:
            ul_share = stats.ul_eff[ptraffic.pair_src] / ptraffic.ul_counts[ptraffic.pair_src]
            dl_share = stats.dl_eff[ptraffic.pair_dst] / ptraffic.dl_counts[ptraffic.pair_dst]
            primary_rates = 0.5 * np.minimum(ul_share, dl_share)
            dl_alone = stats.dl_alone_eff[ptraffic.pair_dst] / ptraffic.dl_counts[ptraffic.pair_dst]
            alone_rates = 0.5 * np.minimum(ul_share, dl_alone)
        else:
            primary_rates = alone_rates = np.empty(0)
        loads["uplink"] = _max_load(ptraffic.ul_counts)
        loads["downlink"] = _max_load(ptraffic.dl_counts)
        counters["clamped_links"] = ptraffic.clamped_links + straffic.clamped_links
    else:
        ptraffic = _primary_traffic_adhoc(instance, run_cfg, cap=3 * frames)
        stats = _simulate_adhoc(run_cfg, phy, ptraffic, straffic, s_p, s_m, frames, trace)
        if ptraffic.pair_cells:
            primary_rates = _pair_rates(ptraffic.pair_cells, stats.primary_eff, ptraffic.tx_counts)
            alone_rates = _pair_rates(ptraffic.pair_cells, stats.alone_eff, ptraffic.tx_counts)
        else:
            primary_rates = alone_rates = np.empty(0)
        loads["primary"] = _max_load(ptraffic.counts)
        counters["clamped_links"] = ptraffic.clamped_links + straffic.clamped_links
        counters["empty_relay_links"] = ptraffic.empty_relay_links + straffic.empty_relay_links

    if straffic.pair_cells:
        secondary_rates = _pair_rates(straffic.pair_cells, stats.secondary_eff, straffic.tx_counts)
    else:
        secondary_rates = np.empty(0)

    loaded_flat = pres_flat = None
    if have_secondary and preservation is not None:
        loaded_flat = bordering_mask(preservation).ravel()
        pres_flat = preservation.mask.ravel()
        regular_flat = ~loaded_flat & ~pres_flat
        if infra:
            loads["secondary_inside_regular"] = _max_load(straffic.counts, regular_flat & amask_flat)
            loads["secondary_inside_loaded"] = _max_load(straffic.counts, loaded_flat & amask_flat)
            loads["secondary_outside_regular"] = _max_load(straffic.counts, regular_flat & ~amask_flat)
            loads["secondary_outside_loaded"] = _max_load(straffic.counts, loaded_flat & ~amask_flat)
        else:
            loads["secondary_regular"] = _max_load(straffic.counts, regular_flat)
            loads["secondary_loaded"] = _max_load(straffic.counts, loaded_flat)

    counters.update(
        secondary_served=straffic.served,
        secondary_unserved_in_region=straffic.unserved_in_region,
        secondary_unserved_disconnected=straffic.unserved_disconnected,
        secondary_detoured=straffic.detoured,
        secondary_nudged=straffic.nudged,
    )

    epsilon_s = None
    loaded_fraction = None
    if straffic.total > 0:
        epsilon_s = (straffic.unserved_in_region + straffic.unserved_disconnected) / straffic.total
        if straffic.served > 0:
            loaded_fraction = straffic.loaded_touches / straffic.served

    report = measure_throughput(primary_rates, alone_rates, secondary_rates, straffic.total)

    load_rows = None
    if keep_loads:
        load_rows = []
        if infra:
            for flat in range(s_p * s_p):
                load_rows.append(("uplink", flat % s_p, flat // s_p,
                                  int(ptraffic.ul_counts[flat]), "regular", 0))
            for flat in range(s_p * s_p):
                load_rows.append(("downlink", flat % s_p, flat // s_p,
                                  int(ptraffic.dl_counts[flat]), "regular", 0))
        else:
            for flat in range(s_p * s_p):
                load_rows.append(("primary", flat % s_p, flat // s_p,
                                  int(ptraffic.counts[flat]), "regular", 0))
        if loaded_flat is not None:
            for flat in range(s_m * s_m):
                if pres_flat[flat]:
                    cls = "blocked"
                elif loaded_flat[flat]:
                    cls = "loaded"
                else:
                    cls = "regular"
                load_rows.append(("secondary", flat % s_m, flat // s_m,
                                  int(straffic.counts[flat]), cls, int(amask_flat[flat])))

    trial = TrialResult(
        config=cfg,
        seed=seed,
        m=instance.m,
        l=instance.l,
        realized_primary=instance.primary.count,
        realized_secondary=instance.secondary.count,
        empty_primary_cell_fraction=empty_cell_fraction(instance.primary, instance.primary_grid),
        region_stats=region_stats,
        loads=loads,
        floors={k: tuple(v) for k, v in sorted(stats.floors.items())},
        counters=counters,
        report=report,
        epsilon_s=epsilon_s,
        loaded_path_fraction=loaded_fraction,
        max_secondary_interference=stats.max_secondary_interference,
        phy=phy,
        trace=stats.trace,
        cell_loads=load_rows,
    )
    trial.checks = verify_bounds(trial)
    return trial


# ---------------------------------------------------------------------------
# scaling sweeps


@dataclass
class ScalingFit:
    """Least-squares power-law fit of a statistic against a density."""

    statistic: str
    x_name: str
    densities: list
    x_values: list
    means: list
    slope: float
    intercept: float
    r_squared: float
    excluded: list
    trials: int
    rows: list  # (density, trial, value)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "statistic": self.statistic,
            "x_name": self.x_name,
            "densities": self.densities,
            "x_values": self.x_values,
            "means": self.means,
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "excluded": self.excluded,
            "trials": self.trials,
        }


def _stat_s_alone(t: TrialResult) -> float:
    return t.report.s_alone


def _stat_s_alone_sqrtlog(t: TrialResult) -> float:
    return t.report.s_alone * math.sqrt(math.log(t.config.n))


def _stat_s_primary(t: TrialResult) -> float:
    return t.report.s_primary


def _stat_t_primary(t: TrialResult) -> float:
    return t.report.t_primary


def _stat_s_secondary(t: TrialResult) -> float:
    return t.report.s_secondary


def _stat_s_secondary_sqrtlog(t: TrialResult) -> float:
    return t.report.s_secondary * math.sqrt(math.log(t.m))


def _stat_t_secondary(t: TrialResult) -> float:
    return t.report.t_secondary


def _stat_epsilon_s(t: TrialResult) -> float:
    return t.epsilon_s if t.epsilon_s is not None else math.nan


def _stat_max_cluster(t: TrialResult) -> float:
    return float(t.region_stats.get("max_cluster", 0))


def _stat_max_primary_load(t: TrialResult) -> float:
    key = "downlink" if t.config.model is Model.INFRASTRUCTURE else "primary"
    return float(t.loads.get(key, 0))


# statistic -> (x variable, extractor, needs the secondary network)
STATISTICS: dict[str, tuple[str, Callable[[TrialResult], float], bool]] = {
    "s_alone": ("n", _stat_s_alone, False),
    "s_alone_vs_l": ("l", _stat_s_alone, False),
    "s_alone_sqrtlog_n": ("n", _stat_s_alone_sqrtlog, False),
    "s_p": ("n", _stat_s_primary, True),
    "t_p": ("n", _stat_t_primary, True),
    "s_s": ("m", _stat_s_secondary, True),
    "s_s_sqrtlog_m": ("m", _stat_s_secondary_sqrtlog, True),
    "t_s": ("m", _stat_t_secondary, True),
    "epsilon_s": ("m", _stat_epsilon_s, True),
    "max_cluster": ("n", _stat_max_cluster, True),
    "max_primary_load": ("n", _stat_max_primary_load, False),
}


def _sweep_job(cfg_dict: dict, density: float, trial: int, master_seed: int,
               frames: int, include_secondary: bool) -> TrialResult:
    cfg = ScalingConfig.from_dict({**cfg_dict, "n": density})
    seed = substream_seed(
        master_seed, int(np.float64(density).view(np.uint64)), trial
    )
    return simulate_trial(cfg, seed, frames=frames, include_secondary=include_secondary)


def _x_value(cfg: ScalingConfig, density: float, x_name: str) -> float:
    if x_name == "n":
        return density
    if x_name == "m":
        return density ** cfg.beta
    if x_name == "l":
        _, l = derive_densities(replace(cfg, n=density))
        return float(l)
    raise ValueError(f"unknown sweep variable {x_name}")


def scaling_sweep(
    cfg: ScalingConfig,
    densities: list,
    trials: int,
    statistic: str,
    seed: int,
    workers: int = 1,
    frames: int = DEFAULT_FRAMES,
) -> ScalingFit:
    """Estimate the scaling exponent of a statistic across densities.

    Runs trials at every density (each on its own derived seed, so the
    set of densities never changes any trial's outcome), averages the
    statistic per density, and fits a line to log-mean versus
    log-density.  Densities whose mean is not positive cannot enter the
    log-log fit and are excluded with a warning.

    Args:
        cfg: template configuration; its n is replaced per density.
        densities: at least 2 distinct density values.
        trials: seeded repetitions per density.
        statistic: key into STATISTICS.
        seed: master seed for the whole sweep.
        workers: process count; 1 runs inline.  Results are identical
            for any worker count.
        frames: schedule frames per trial.

    Returns:
        ScalingFit with the fitted slope and the raw per-trial rows.
    """
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}; have {sorted(STATISTICS)}")
    distinct = sorted(set(float(d) for d in densities))
    if len(distinct) < 2:
        raise ValueError(f"sweep needs at least 2 distinct densities, got {len(distinct)}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if len(distinct) < 3:
        warnings.warn("slope estimated from fewer than 3 densities", stacklevel=2)
    if trials < 5:
        warnings.warn("slope estimated from fewer than 5 trials per density", stacklevel=2)

    x_name, extract, needs_secondary = STATISTICS[statistic]
    cfg_dict = cfg.to_dict()
    jobs = [(d, t) for d in distinct for t in range(trials)]
    results: dict = {}
    if workers <= 1:
        for d, t in jobs:
            results[(d, t)] = _sweep_job(cfg_dict, d, t, seed, frames, needs_secondary)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                (d, t): pool.submit(_sweep_job, cfg_dict, d, t, seed, frames, needs_secondary)
                for d, t in jobs
            }
            for key, fut in futures.items():
                results[key] = fut.result()

    rows = []
    means = []
    x_values = []
    xs = []
    kept = []
    excluded = []
    for d in distinct:
        values = []
        for t in range(trials):
            v = extract(results[(d, t)])
            rows.append((d, t, float(v)))
            if not math.isnan(v):
                values.append(v)
        mean = float(np.mean(values)) if values else math.nan
        means.append(mean)
        x_values.append(_x_value(cfg, d, x_name))
        if math.isnan(mean) or mean <= 0.0:
            excluded.append(d)
            continue
        xs.append(x_values[-1])
        kept.append(mean)
    if excluded:
        warnings.warn(
            f"densities {excluded} excluded from the log-log fit "
            "(non-positive or undefined mean)", stacklevel=2
        )
    if len(kept) < 2:
        raise ValueError(
            "scaling fit needs positive means at 2 or more densities; "
            f"only {len(kept)} usable"
        )
    log_x = np.log(np.asarray(xs))
    log_y = np.log(np.asarray(kept))
    slope, intercept = np.polyfit(log_x, log_y, 1)
    fitted = slope * log_x + intercept
    ss_res = float(np.sum((log_y - fitted) ** 2))
    ss_tot = float(np.sum((log_y - log_y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ScalingFit(
        statistic=statistic,
        x_name=x_name,
        densities=[float(d) for d in distinct],
        x_values=x_values,
        means=means,
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r2,
        excluded=excluded,
        trials=trials,
        rows=rows,
    )


def default_workers() -> int:
    """Worker count for sweeps: HETNET_THREADS if set, else the CPU count."""
    env = os.environ.get("HETNET_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValueError(f"HETNET_THREADS must be an integer, got {env!r}") from exc
    return max(1, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# report serialization; all writers are byte-deterministic for a given input


def aggregate_checks(trials: list) -> dict:
    """Per-check pass statistics across trials.

    Voided checks are excluded from the denominator; vacuous ones count
    as passes.  A family nobody could measure has pass fraction 1.
    """
    families: dict = {}
    for trial in trials:
        for check in trial.checks:
            fam = families.setdefault(check.name, {
                "passed": 0, "counted": 0, "voided": 0, "vacuous": 0, "total": 0,
            })
            fam["total"] += 1
            if check.voided:
                fam["voided"] += 1
                continue
            fam["counted"] += 1
            fam["vacuous"] += int(check.vacuous)
            fam["passed"] += int(check.passed)
    for fam in families.values():
        fam["pass_fraction"] = (
            fam["passed"] / fam["counted"] if fam["counted"] else 1.0
        )
    return dict(sorted(families.items()))


def write_trials_json(trials: list, path: str) -> None:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "num_trials": len(trials),
        "aggregate": aggregate_checks(trials),
        "trials": [t.to_dict() for t in trials],
    }
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def write_fit_json(fit: ScalingFit, path: str) -> None:
    with open(path, "w") as f:
        json.dump(fit.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def write_sweep_csv(fit: ScalingFit, path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["density", "trial", "value"])
        for density, trial, value in fit.rows:
            writer.writerow([repr(float(density)), trial, repr(float(value))])


def write_loads_csv(rows: list, path: str) -> None:
    """rows: (network, col, row, count, classification, in_avoidance)."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["network", "col", "row", "count", "classification", "in_avoidance"])
        writer.writerows(rows)


def write_trace_csv(rows: list, path: str) -> None:
    """rows: (frame, slot, network, col, row, rate)."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["frame", "slot", "network", "col", "row", "rate"])
        for frame, slot, network, col, row, rate in rows:
            writer.writerow([frame, slot, network, col, row, repr(float(rate))])
