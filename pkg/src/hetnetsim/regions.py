"""Protected squares on the secondary grid and their cluster structure.

Two families of regions shape secondary routing.  Preservation regions
are hard obstacles: a 3x3 block of secondary cells around every primary
node, plus a smaller block around each base station in the
infrastructure model.  Avoidance regions are the larger squares around
base stations that secondary paths shift away from and inside which
transmissions are confined to their own time phase; they are not
obstacles.

Preservation regions of nearby primary nodes merge into clusters.  The
maximum observed cluster size feeds the load and outage bounds, so the
decomposition here is exact (disjoint-set union over region adjacency)
rather than approximate.

Cell masks are numpy boolean arrays indexed [row, col].
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .deployment import (
    Model,
    NetworkInstance,
    round_half_up,
    secondary_cell_area,
)
from .geometry import CellGrid, CellIndex, Point, cell_of

SCHEMA_VERSION = 1


class RegionKind(str, enum.Enum):
    PRESERVE_PRIMARY = "preserve_primary"
    PRESERVE_BS = "preserve_bs"
    AVOIDANCE = "avoidance"


@dataclass(frozen=True)
class Region:
    """(2k+1) x (2k+1) block of secondary cells, clipped at the boundary."""

    kind: RegionKind
    center: CellIndex
    half_width: int

    def rect(self, grid: CellGrid) -> tuple[int, int, int, int]:
        """Clipped inclusive bounds (col_lo, col_hi, row_lo, row_hi)."""
        s = grid.cells_per_side
        k = self.half_width
        return (
            max(0, self.center.col - k),
            min(s - 1, self.center.col + k),
            max(0, self.center.row - k),
            min(s - 1, self.center.row + k),
        )

    def cells(self, grid: CellGrid) -> Iterator[CellIndex]:
        c_lo, c_hi, r_lo, r_hi = self.rect(grid)
        for row in range(r_lo, r_hi + 1):
            for col in range(c_lo, c_hi + 1):
                yield CellIndex(col, row)


def avoidance_half_width(area_fraction: float, bs_cell_area: float,
                         sec_cell_area: float) -> int:
    """Half-width in secondary cells of a square covering the requested
    fraction of one base-station cell.  Ties round up so the square is
    never smaller than a symmetric rounding would give."""
    ratio = area_fraction * bs_cell_area / sec_cell_area
    return max(0, round_half_up((math.sqrt(ratio) - 1.0) / 2.0))


def bs_preservation_half_width(area_fraction: float, n: float,
                               bs_cell_area: float, sec_cell_area: float) -> int:
    """Half-width of the base-station preservation square, a log(n) factor
    smaller in area than the avoidance square."""
    ratio = (area_fraction / math.log(n)) * bs_cell_area / sec_cell_area
    return max(0, round_half_up((math.sqrt(ratio) - 1.0) / 2.0))


@dataclass
class RegionSet:
    """Immutable collection of regions with their blocked-cell union."""

    regions: tuple[Region, ...]
    grid: CellGrid
    blocked: frozenset[CellIndex]
    mask: np.ndarray  # bool (s, s), [row, col]; True where blocked

    def is_blocked(self, cell: CellIndex) -> bool:
        return bool(self.mask[cell.row, cell.col])

    @property
    def num_blocked(self) -> int:
        return len(self.blocked)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "grid": {
                "cells_per_side": self.grid.cells_per_side,
                "nominal_area": self.grid.nominal_area,
            },
            "regions": [
                {
                    "kind": r.kind.value,
                    "center": [r.center.col, r.center.row],
                    "half_width": r.half_width,
                }
                for r in self.regions
            ],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")

    def write_pbm(self, path) -> None:
        """Plain PBM bitmap, blocked cells black; top grid row first."""
        s = self.grid.cells_per_side
        lines = ["P1", f"# {len(self.regions)} regions on {s}x{s} grid", f"{s} {s}"]
        for row in range(s - 1, -1, -1):
            lines.append(" ".join("1" if self.mask[row, col] else "0"
                                  for col in range(s)))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def build_region_set(regions: Sequence[Region], grid: CellGrid) -> RegionSet:
    s = grid.cells_per_side
    mask = np.zeros((s, s), dtype=bool)
    for r in regions:
        c_lo, c_hi, r_lo, r_hi = r.rect(grid)
        mask[r_lo : r_hi + 1, c_lo : c_hi + 1] = True
    rows, cols = np.nonzero(mask)
    blocked = frozenset(CellIndex(int(c), int(r)) for c, r in zip(cols, rows))
    mask.flags.writeable = False
    return RegionSet(regions=tuple(regions), grid=grid, blocked=blocked, mask=mask)


def build_preservation_regions(instance: NetworkInstance) -> RegionSet:
    """Hard-obstacle regions: one 3x3 square per primary node, plus the
    smaller base-station squares in the infrastructure model.

    Args:
        instance: realized deployment.

    Returns:
        RegionSet on the secondary grid.

    Raises:
        ValueError: secondary grid coarser than 3 cells per side.
    """
    grid = instance.secondary_grid
    if grid.cells_per_side < 3:
        raise ValueError(
            f"secondary grid of {grid.cells_per_side} cells per side is too "
            "coarse for preservation regions (need at least 3)"
        )
    regions = [
        Region(RegionKind.PRESERVE_PRIMARY, cell_of(p, grid), 1)
        for p in instance.primary.points()
    ]
    if instance.model is Model.INFRASTRUCTURE:
        k = bs_preservation_half_width(
            instance.config.delta_a,
            instance.config.n,
            1.0 / instance.l,
            secondary_cell_area(instance.m),
        )
        regions.extend(
            Region(RegionKind.PRESERVE_BS, cell_of(p, grid), k)
            for p in _bs_points(instance)
        )
    return build_region_set(regions, grid)


def build_avoidance_regions(instance: NetworkInstance) -> RegionSet:
    """Shift-triggering squares around base stations.

    Distinct base stations must yield disjoint squares; overlap means the
    configured area fraction is too large for the lattice pitch.
    """
    if instance.model is not Model.INFRASTRUCTURE:
        raise ValueError("avoidance regions exist only under the infrastructure model")
    grid = instance.secondary_grid
    k = avoidance_half_width(
        instance.config.delta_a, 1.0 / instance.l, secondary_cell_area(instance.m)
    )
    regions = [
        Region(RegionKind.AVOIDANCE, cell_of(p, grid), k)
        for p in _bs_points(instance)
    ]
    owner: dict[CellIndex, int] = {}
    for i, region in enumerate(regions):
        for cell in region.cells(grid):
            if cell in owner:
                raise ValueError(
                    f"delta_a={instance.config.delta_a} too large: avoidance "
                    f"regions of base stations {owner[cell]} and {i} overlap "
                    f"at cell {tuple(cell)}"
                )
            owner[cell] = i
    return build_region_set(regions, grid)


def _bs_points(instance: NetworkInstance) -> Iterator[Point]:
    for x, y in instance.bs_positions:
        yield Point(float(x), float(y))


@dataclass
class ClusterDecomposition:
    """Partition of preservation regions into adjacency clusters."""

    clusters: tuple[tuple[int, ...], ...]
    max_size: int
    projection_lengths: tuple[int, ...]  # y-axis span per cluster, in cells


class _DisjointSet:
    def __init__(self, size: int):
        self.parent = list(range(size))
        self.rank = [0] * size

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1


def _rects_adjacent(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> bool:
    # overlap or edge/corner contact of clipped cell rectangles
    return (
        b[0] <= a[1] + 1 and a[0] <= b[1] + 1
        and b[2] <= a[3] + 1 and a[2] <= b[3] + 1
    )


def cluster_components(rs: RegionSet) -> ClusterDecomposition:
    """Group regions whose cell squares intersect or touch (8-adjacency).

    Only primary-node preservation regions cluster; mixed kinds are
    rejected so the caller cannot accidentally fold base-station squares
    into the percolation statistic.

    Args:
        rs: RegionSet of PRESERVE_PRIMARY regions.

    Returns:
        ClusterDecomposition; clusters ordered by smallest member index.
    """
    for r in rs.regions:
        if r.kind is not RegionKind.PRESERVE_PRIMARY:
            raise ValueError(f"cannot cluster regions of kind {r.kind.value}")
    count = len(rs.regions)
    if count == 0:
        return ClusterDecomposition(clusters=(), max_size=0, projection_lengths=())

    rects = [r.rect(rs.grid) for r in rs.regions]
    dsu = _DisjointSet(count)

    # neighbor search over center cells; adjacency is impossible beyond
    # a center offset of 2k+1 in either axis
    reach = 2 * max(r.half_width for r in rs.regions) + 1
    by_center: dict[tuple[int, int], list[int]] = {}
    for i, r in enumerate(rs.regions):
        by_center.setdefault((r.center.col, r.center.row), []).append(i)
    for i, r in enumerate(rs.regions):
        for dc in range(-reach, reach + 1):
            for dr in range(-reach, reach + 1):
                for j in by_center.get((r.center.col + dc, r.center.row + dr), ()):
                    if j > i and _rects_adjacent(rects[i], rects[j]):
                        dsu.union(i, j)

    members: dict[int, list[int]] = {}
    for i in range(count):
        members.setdefault(dsu.find(i), []).append(i)
    clusters = tuple(
        tuple(sorted(group)) for group in sorted(members.values(), key=lambda g: g[0])
    )
    projections = tuple(
        max(rects[i][3] for i in group) - min(rects[i][2] for i in group) + 1
        for group in clusters
    )
    return ClusterDecomposition(
        clusters=clusters,
        max_size=max(len(group) for group in clusters),
        projection_lengths=projections,
    )


@dataclass
class FreeCellGraph:
    """Connectivity of unblocked cells under 4-adjacency."""

    grid: CellGrid
    labels: np.ndarray  # int32 (s, s); -1 blocked, else component id
    num_free: int
    num_edges: int
    component_sizes: tuple[int, ...]

    @property
    def num_components(self) -> int:
        return len(self.component_sizes)

    def component_of(self, cell: CellIndex) -> int:
        return int(self.labels[cell.row, cell.col])

    def reachable(self, a: CellIndex, b: CellIndex) -> bool:
        la, lb = self.component_of(a), self.component_of(b)
        return la >= 0 and la == lb


def free_cell_graph(rs: RegionSet) -> FreeCellGraph:
    """Label connected components of the unblocked cells.

    Component ids follow row-major discovery order, so labeling is
    deterministic for a given mask.
    """
    s = rs.grid.cells_per_side
    free = ~rs.mask
    labels = np.full((s, s), -1, dtype=np.int32)
    sizes: list[int] = []
    for row in range(s):
        for col in range(s):
            if not free[row, col] or labels[row, col] >= 0:
                continue
            comp = len(sizes)
            stack = [(row, col)]
            labels[row, col] = comp
            size = 0
            while stack:
                r0, c0 = stack.pop()
                size += 1
                for r1, c1 in ((r0 - 1, c0), (r0 + 1, c0), (r0, c0 - 1), (r0, c0 + 1)):
                    if 0 <= r1 < s and 0 <= c1 < s and free[r1, c1] and labels[r1, c1] < 0:
                        labels[r1, c1] = comp
                        stack.append((r1, c1))
            sizes.append(size)
    num_edges = int(np.sum(free[:, 1:] & free[:, :-1]) + np.sum(free[1:, :] & free[:-1, :]))
    labels.flags.writeable = False
    return FreeCellGraph(
        grid=rs.grid,
        labels=labels,
        num_free=int(free.sum()),
        num_edges=num_edges,
        component_sizes=tuple(sizes),
    )


def bordering_mask(rs: RegionSet) -> np.ndarray:
    """Cells 8-adjacent to a blocked cell but not blocked themselves.

    These are the cells that absorb re-routed traffic and get the Loaded
    classification.
    """
    s = rs.grid.cells_per_side
    dilated = np.zeros((s, s), dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            src = rs.mask[
                max(0, -dr) : s - max(0, dr), max(0, -dc) : s - max(0, dc)
            ]
            dilated[
                max(0, dr) : s - max(0, -dr), max(0, dc) : s - max(0, -dc)
            ] |= src
    return dilated & ~rs.mask
