"""Cell-level routing for both networks.

Primary traffic crosses the grid column-first then row-wise (ad hoc) or
reaches its serving base station in a single wireless hop
(infrastructure).  Secondary traffic follows the same column-then-row
plan but must respect two kinds of protected squares: preservation
regions are circumnavigated with a wall-following detour, and avoidance
regions push straight segments onto shifted rows or columns.

All routes are sequences of hops between 4-adjacent cells.  The actual
transmitting and receiving nodes inside each cell are chosen later by
the slot simulator; routing only fixes the cell path.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

import numpy as np

from .deployment import Model, NetworkInstance
from .geometry import CellGrid, CellIndex, Point, cell_of
from .regions import RegionSet, bordering_mask


class Segment(enum.Enum):
    HDP = "hdp"                          # horizontal run toward the destination column
    VDP = "vdp"                          # vertical run toward the destination row
    DETOUR = "detour"                    # wall-follow around a preservation cluster
    SHIFT_CONNECTOR = "shift_connector"  # source-side connector onto a shifted row/column
    SHORT_HDP = "short_hdp"              # horizontal tail from a shifted column to the destination
    SHORT_VDP = "short_vdp"              # vertical tail back from a shifted row
    UPLINK = "uplink"                    # source to serving base station
    DOWNLINK = "downlink"                # base station to destination


class Phase(enum.Enum):
    ONE = 1                # transmitter inside an avoidance region
    TWO = 2                # transmitter outside every avoidance region
    NOT_APPLICABLE = 0


class RouteStatus(enum.Enum):
    SERVED = "served"
    UNSERVED_IN_REGION = "unserved_in_region"
    UNSERVED_DISCONNECTED = "unserved_disconnected"


class Pair(NamedTuple):
    pair_id: int
    src: Point
    dst: Point


class Hop(NamedTuple):
    from_cell: CellIndex
    to_cell: CellIndex
    segment: Segment
    phase: Phase = Phase.NOT_APPLICABLE


@dataclass
class RoutePath:
    pair_id: int
    hops: tuple[Hop, ...]
    status: RouteStatus
    source_cell: CellIndex
    dest_cell: CellIndex
    detoured: bool = False
    shifted_horizontal: bool = False
    shifted_vertical: bool = False
    nudged: bool = False  # shifted segment still clipped an avoidance cell

    @property
    def served(self) -> bool:
        return self.status is RouteStatus.SERVED


def _walk(waypoints: list[tuple[CellIndex, Segment]]) -> tuple[list[CellIndex], list[Segment]]:
    """Expand axis-aligned waypoints into unit steps.

    segs[i] labels the move into cells[i]; segs[0] is the label used for
    a degenerate single-cell path.
    """
    cells = [waypoints[0][0]]
    segs = [waypoints[0][1]]
    for target, seg in waypoints[1:]:
        cur = cells[-1]
        if target.col != cur.col and target.row != cur.row:
            raise ValueError(f"waypoints {tuple(cur)} -> {tuple(target)} not axis-aligned")
        dc = (target.col > cur.col) - (target.col < cur.col)
        dr = (target.row > cur.row) - (target.row < cur.row)
        while cur != target:
            cur = CellIndex(cur.col + dc, cur.row + dr)
            cells.append(cur)
            segs.append(seg)
    return cells, segs


def _left(h: tuple[int, int]) -> tuple[int, int]:
    return (-h[1], h[0])


def _right(h: tuple[int, int]) -> tuple[int, int]:
    return (h[1], -h[0])


def _back(h: tuple[int, int]) -> tuple[int, int]:
    return (-h[0], -h[1])


def _wall_follow(
    start: CellIndex,
    heading: tuple[int, int],
    start_index: int,
    index_of: dict[CellIndex, int],
    mask: np.ndarray,
    s: int,
    clockwise: bool,
) -> Optional[tuple[list[CellIndex], int]]:
    """Trace one side of the obstacle until the walk rejoins the plan.

    The clockwise tracer turns left first and then keeps the obstacle on
    its right; the counterclockwise tracer mirrors that.  Stepping off
    the unit square or closing a full loop without rejoining fails this
    side.  Returns the detour cells and the planned index to resume at.
    """

    def advance(pos: CellIndex, order) -> Optional[tuple[CellIndex, tuple[int, int]]]:
        for cand in order:
            c, r = pos.col + cand[0], pos.row + cand[1]
            inside = 0 <= c < s and 0 <= r < s
            if inside and mask[r, c]:
                continue
            if not inside:
                return None
            return CellIndex(c, r), cand
        return None

    h = heading
    first = (_left(h), _back(h)) if clockwise else (_right(h), _back(h))
    step = advance(start, first)
    if step is None:
        return None
    pos, h = step
    path = [pos]
    j = index_of.get(pos)
    if j is not None and j > start_index:
        return path, j
    seen = {(pos, h)}
    while True:
        order = (_right(h), h, _left(h), _back(h)) if clockwise else (_left(h), h, _right(h), _back(h))
        step = advance(pos, order)
        if step is None:
            return None
        pos, h = step
        path.append(pos)
        j = index_of.get(pos)
        if j is not None and j > start_index:
            return path, j
        if (pos, h) in seen:
            return None  # circled the obstacle without meeting the plan
        seen.add((pos, h))


def _execute_walk(
    cells: list[CellIndex],
    segs: list[Segment],
    mask: np.ndarray,
    s: int,
) -> Optional[tuple[list[Hop], bool]]:
    """Follow the planned cells, detouring every time the next cell is
    blocked.  Both detour directions are traced and the shorter one wins;
    ties go clockwise.  Returns None when neither direction rejoins."""
    index_of: dict[CellIndex, int] = {}
    for i, c in enumerate(cells):
        index_of.setdefault(c, i)
    hops: list[Hop] = []
    detoured = False
    i = 0
    while i < len(cells) - 1:
        nxt = cells[i + 1]
        if not mask[nxt.row, nxt.col]:
            hops.append(Hop(cells[i], nxt, segs[i + 1]))
            i += 1
            continue
        heading = (nxt.col - cells[i].col, nxt.row - cells[i].row)
        cw = _wall_follow(cells[i], heading, i, index_of, mask, s, clockwise=True)
        ccw = _wall_follow(cells[i], heading, i, index_of, mask, s, clockwise=False)
        if cw is not None and ccw is not None:
            pick = cw if len(cw[0]) <= len(ccw[0]) else ccw
        else:
            pick = cw if cw is not None else ccw
        if pick is None:
            return None
        detour, j = pick
        prev = cells[i]
        for cell in detour:
            hops.append(Hop(prev, cell, Segment.DETOUR))
            prev = cell
        detoured = True
        i = j
    return hops, detoured


def primary_route(pair: Pair, grid: CellGrid) -> RoutePath:
    """Column-first multihop walk between the endpoint cells.

    Nothing blocks primary traffic, so the route always has exactly
    |dcol| + |drow| hops (one zero-length hop when the endpoints share a
    cell) and is always served.
    """
    src = cell_of(pair.src, grid)
    dst = cell_of(pair.dst, grid)
    if src == dst:
        hops: tuple[Hop, ...] = (Hop(src, src, Segment.HDP),)
    else:
        cells, segs = _walk([
            (src, Segment.HDP),
            (CellIndex(dst.col, src.row), Segment.HDP),
            (dst, Segment.VDP),
        ])
        hops = tuple(Hop(cells[i], cells[i + 1], segs[i + 1]) for i in range(len(cells) - 1))
    return RoutePath(pair.pair_id, hops, RouteStatus.SERVED, src, dst)


def nearest_bs(p: Point, instance: NetworkInstance) -> int:
    """Index of the closest base station (its lattice is row-major)."""
    if instance.bs_positions.shape[0] == 0:
        raise ValueError("instance has no base stations")
    d = instance.bs_positions - np.array([p.x, p.y])
    return int(np.argmin(np.einsum("ij,ij->i", d, d)))


def primary_route_infra(pair: Pair, instance: NetworkInstance) -> tuple[RoutePath, RoutePath]:
    """Uplink and downlink halves of one infrastructure-mode connection.

    Each half is a single wireless hop to or from the serving (nearest)
    base station; the wired backbone between stations costs nothing and
    is not represented.
    """
    if instance.model is not Model.INFRASTRUCTURE:
        raise ValueError("infrastructure routing requires the infrastructure model")
    grid = instance.primary_grid
    s = grid.cells_per_side
    src = cell_of(pair.src, grid)
    dst = cell_of(pair.dst, grid)
    up = nearest_bs(pair.src, instance)
    dn = nearest_bs(pair.dst, instance)
    up_cell = CellIndex(up % s, up // s)
    dn_cell = CellIndex(dn % s, dn // s)
    uplink = RoutePath(
        pair.pair_id, (Hop(src, up_cell, Segment.UPLINK),), RouteStatus.SERVED, src, up_cell
    )
    downlink = RoutePath(
        pair.pair_id, (Hop(dn_cell, dst, Segment.DOWNLINK),), RouteStatus.SERVED, dn_cell, dst
    )
    return uplink, downlink


def secondary_route_adhoc(pair: Pair, instance: NetworkInstance, obstacles: RegionSet) -> RoutePath:
    """Column-first walk that detours around preservation regions.

    Endpoints inside a region are unserved outright; a plan that cannot
    be rejoined on either side of some cluster is unserved as
    disconnected.
    """
    grid = instance.secondary_grid
    if obstacles.grid.cells_per_side != grid.cells_per_side:
        raise ValueError("obstacle set was built on a different grid")
    src = cell_of(pair.src, grid)
    dst = cell_of(pair.dst, grid)
    if obstacles.is_blocked(src) or obstacles.is_blocked(dst):
        return RoutePath(pair.pair_id, (), RouteStatus.UNSERVED_IN_REGION, src, dst)
    if src == dst:
        return RoutePath(pair.pair_id, (Hop(src, src, Segment.HDP),), RouteStatus.SERVED, src, dst)
    cells, segs = _walk([
        (src, Segment.HDP),
        (CellIndex(dst.col, src.row), Segment.HDP),
        (dst, Segment.VDP),
    ])
    out = _execute_walk(cells, segs, obstacles.mask, grid.cells_per_side)
    if out is None:
        return RoutePath(pair.pair_id, (), RouteStatus.UNSERVED_DISCONNECTED, src, dst)
    hops, detoured = out
    return RoutePath(pair.pair_id, tuple(hops), RouteStatus.SERVED, src, dst, detoured=detoured)


def shift_y(y1: float, d1: float, d2: float) -> float:
    """Linear shift moving a coordinate out of an avoidance band.

    Maps the offset y1 in [0, d1] from the band center onto [d1, d1+d2],
    the free strip between the band edge and the lattice midline.
    Distinct offsets stay distinct, so shifted paths do not pile up on a
    single row.
    """
    if d1 <= 0:
        raise ValueError(f"band half-width d1 must be positive, got {d1}")
    if d2 < 0:
        raise ValueError(f"free strip width d2 must be nonnegative, got {d2}")
    if not 0.0 <= y1 <= d1:
        raise ValueError(f"offset y1={y1} outside [0, {d1}]")
    return (d2 / d1) * y1 + d1


def _shifted_coordinate(coord: float, pitch: float, d1: float, d2: float) -> tuple[float, int]:
    """Shift one coordinate away from the nearest lattice-line center.

    Returns the shifted coordinate (clamped to the unit interval) and
    the outward direction sign.
    """
    per_side = round(1.0 / pitch)
    band = min(max(int(math.floor(coord / pitch)), 0), per_side - 1)
    center = (band + 0.5) * pitch
    dy = coord - center
    sign = 1 if dy >= 0 else -1
    off = shift_y(min(abs(dy), d1), d1, d2)
    return min(max(center + sign * off, 0.0), 1.0), sign


def _row_span_blocked(mask: np.ndarray, row: int, c0: int, c1: int) -> bool:
    lo, hi = (c0, c1) if c0 <= c1 else (c1, c0)
    return bool(mask[row, lo : hi + 1].any())


def _col_span_blocked(mask: np.ndarray, col: int, r0: int, r1: int) -> bool:
    lo, hi = (r0, r1) if r0 <= r1 else (r1, r0)
    return bool(mask[lo : hi + 1, col].any())


def _first_free_row(mask: np.ndarray, row: int, c0: int, c1: int, step: int, s: int) -> int:
    r = row
    while 0 <= r < s and _row_span_blocked(mask, r, c0, c1):
        r += step
    return r if 0 <= r < s else row


def _first_free_col(mask: np.ndarray, col: int, r0: int, r1: int, step: int, s: int) -> int:
    c = col
    while 0 <= c < s and _col_span_blocked(mask, c, r0, r1):
        c += step
    return c if 0 <= c < s else col


def secondary_route_infra(
    pair: Pair,
    instance: NetworkInstance,
    obstacles: RegionSet,
    avoidance: RegionSet,
) -> RoutePath:
    """Column-first walk that also steers clear of avoidance regions.

    A horizontal run crossing an avoidance cell moves to the shifted row
    derived from the source's own offset within its lattice band; a
    vertical run shifts its column from the destination's offset the
    same way.  Short connector segments join the endpoints to the
    shifted runs.  Cell rounding can leave the shifted run clipping an
    avoidance square, in which case it is nudged outward to the first
    clear row or column and the path is flagged.  Preservation detours
    then apply to the whole walk, and each hop is tagged with the time
    phase its transmitter cell belongs to.
    """
    if instance.model is not Model.INFRASTRUCTURE:
        raise ValueError("avoidance-aware routing requires the infrastructure model")
    grid = instance.secondary_grid
    s = grid.cells_per_side
    src = cell_of(pair.src, grid)
    dst = cell_of(pair.dst, grid)
    if obstacles.is_blocked(src) or obstacles.is_blocked(dst):
        return RoutePath(pair.pair_id, (), RouteStatus.UNSERVED_IN_REGION, src, dst)

    amask = avoidance.mask
    pitch = instance.bs_grid.cell_side
    d1 = 0.5 * math.sqrt(instance.config.delta_a) * pitch
    d2 = 0.5 * pitch - d1

    def tag_phase(hop: Hop) -> Hop:
        inside = bool(amask[hop.from_cell.row, hop.from_cell.col])
        return hop._replace(phase=Phase.ONE if inside else Phase.TWO)

    if src == dst:
        hop = tag_phase(Hop(src, src, Segment.HDP))
        return RoutePath(pair.pair_id, (hop,), RouteStatus.SERVED, src, dst)

    r_h = src.row
    nudged = False
    shifted_h = _row_span_blocked(amask, src.row, src.col, dst.col)
    if shifted_h:
        y, sign = _shifted_coordinate(pair.src.y, pitch, d1, d2)
        r_h = cell_of(Point(pair.src.x, y), grid).row
        clear = _first_free_row(amask, r_h, src.col, dst.col, sign, s)
        nudged = nudged or clear != r_h or _row_span_blocked(amask, clear, src.col, dst.col)
        r_h = clear

    c_v = dst.col
    shifted_v = _col_span_blocked(amask, dst.col, r_h, dst.row)
    if shifted_v:
        x, sign = _shifted_coordinate(pair.dst.x, pitch, d1, d2)
        c_v = cell_of(Point(x, pair.dst.y), grid).col
        clear = _first_free_col(amask, c_v, r_h, dst.row, sign, s)
        nudged = nudged or clear != c_v or _col_span_blocked(amask, clear, r_h, dst.row)
        c_v = clear

    # a pair with no horizontal (or vertical) leg of its own gets only
    # connector labels for movement that a shift introduced
    main_h = Segment.HDP if src.col != dst.col else Segment.SHIFT_CONNECTOR
    main_v = Segment.VDP if src.row != dst.row else Segment.SHORT_VDP
    cells, segs = _walk([
        (src, Segment.HDP),
        (CellIndex(src.col, r_h), Segment.SHIFT_CONNECTOR),
        (CellIndex(c_v, r_h), main_h),
        (CellIndex(c_v, dst.row), main_v),
        (dst, Segment.SHORT_HDP),
    ])
    out = _execute_walk(cells, segs, obstacles.mask, s)
    if out is None:
        return RoutePath(pair.pair_id, (), RouteStatus.UNSERVED_DISCONNECTED, src, dst)
    hops, detoured = out
    return RoutePath(
        pair.pair_id,
        tuple(tag_phase(h) for h in hops),
        RouteStatus.SERVED,
        src,
        dst,
        detoured=detoured,
        shifted_horizontal=shifted_h,
        shifted_vertical=shifted_v,
        nudged=nudged,
    )


class LoadClass(enum.Enum):
    REGULAR = "regular"
    LOADED = "loaded"


@dataclass
class CellLoad:
    cell: CellIndex
    path_count: int
    classification: LoadClass
    in_avoidance: bool


def cell_path_counts(routes: Iterable[RoutePath], grid: CellGrid) -> np.ndarray:
    """Served paths crossing each cell; a path touching a cell through
    several hops still counts once."""
    s = grid.cells_per_side
    counts = np.zeros((s, s), dtype=np.int64)
    for route in routes:
        if route.status is not RouteStatus.SERVED:
            continue
        touched = {route.hops[0].from_cell} if route.hops else set()
        for h in route.hops:
            touched.add(h.to_cell)
        for cell in touched:
            counts[cell.row, cell.col] += 1
    return counts


def classify_loads(
    routes: Iterable[RoutePath],
    instance: NetworkInstance,
    regions: RegionSet,
    avoidance: Optional[RegionSet] = None,
) -> list[CellLoad]:
    """Per-cell traffic with the loaded/regular split.

    Cells bordering a preservation region absorb the detoured traffic
    and are classified as loaded; everything else is regular.  The
    avoidance flag is informational and never affects classification.
    """
    grid = instance.secondary_grid
    counts = cell_path_counts(routes, grid)
    loaded = bordering_mask(regions)
    amask = avoidance.mask if avoidance is not None else None
    out: list[CellLoad] = []
    for row in range(grid.cells_per_side):
        for col in range(grid.cells_per_side):
            out.append(
                CellLoad(
                    cell=CellIndex(col, row),
                    path_count=int(counts[row, col]),
                    classification=LoadClass.LOADED if loaded[row, col] else LoadClass.REGULAR,
                    in_avoidance=bool(amask[row, col]) if amask is not None else False,
                )
            )
    return out
