"""Unit-square geometry: point processes, square cell grids, cell lookup.

Every network in the simulator lives on the unit square [0,1] x [0,1].
Nodes are dropped by a homogeneous Poisson point process and organized
into a square grid of cells whose side is chosen so that each cell holds
enough nodes for relaying with high probability.  All cell bookkeeping
elsewhere in the package is in terms of (col, row) indices produced here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class Point(NamedTuple):
    x: float
    y: float


class CellIndex(NamedTuple):
    col: int
    row: int


def substream_seed(seed: int, *labels: int) -> int:
    """Derive an independent child seed from a master seed.

    A splitmix64-style mix, so the set of draws a component makes never
    depends on the order in which other components consume randomness.
    """
    state = seed & 0xFFFFFFFFFFFFFFFF
    for label in labels:
        state = (state ^ (label & 0xFFFFFFFFFFFFFFFF)) & 0xFFFFFFFFFFFFFFFF
        state = (state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        state = z ^ (z >> 31)
    return state


@dataclass(frozen=True)
class CellGrid:
    """Square grid of cells_per_side x cells_per_side cells tiling [0,1]^2."""

    cells_per_side: int
    nominal_area: float  # requested cell area; realized area is >= this

    @property
    def cell_side(self) -> float:
        return 1.0 / self.cells_per_side

    @property
    def cell_area(self) -> float:
        return 1.0 / (self.cells_per_side ** 2)

    @property
    def num_cells(self) -> int:
        return self.cells_per_side ** 2

    def center(self, cell: CellIndex) -> Point:
        s = self.cell_side
        return Point((cell.col + 0.5) * s, (cell.row + 0.5) * s)

    def contains(self, cell: CellIndex) -> bool:
        return 0 <= cell.col < self.cells_per_side and 0 <= cell.row < self.cells_per_side


def build_grid(nominal_area: float) -> CellGrid:
    """Largest square grid whose cells still have area >= nominal_area.

    cells_per_side = max(1, floor(1 / sqrt(nominal_area))), with an exact
    integer correction so that ratios like 1/36 do not lose a cell to
    floating point noise.
    """
    if not (0.0 < nominal_area <= 1.0):
        raise ValueError(f"nominal cell area must be in (0, 1], got {nominal_area}")
    s = max(1, int(1.0 / math.sqrt(nominal_area)))
    # s is valid iff s*s*a <= 1; nudge across representation error of exact ratios
    while (s + 1) * (s + 1) * nominal_area <= 1.0 + 1e-12:
        s += 1
    while s > 1 and s * s * nominal_area > 1.0 + 1e-12:
        s -= 1
    return CellGrid(cells_per_side=s, nominal_area=nominal_area)


def cell_of(p: Point, grid: CellGrid) -> CellIndex:
    """Cell containing p; points on the far boundary land in the last cell."""
    if not (0.0 <= p[0] <= 1.0 and 0.0 <= p[1] <= 1.0):
        raise ValueError(f"point {p} outside the unit square")
    s = grid.cells_per_side
    col = min(int(p[0] * s), s - 1)
    row = min(int(p[1] * s), s - 1)
    return CellIndex(col, row)


def cells_of(xy: np.ndarray, grid: CellGrid) -> np.ndarray:
    """Vectorized cell_of: (N, 2) positions -> (N, 2) int array of (col, row)."""
    s = grid.cells_per_side
    idx = np.minimum((xy * s).astype(np.int64), s - 1)
    return idx


@dataclass
class NodeSet:
    """Realized positions of one network's nodes."""

    positions: np.ndarray  # shape (count, 2), all coordinates in [0, 1]

    @property
    def count(self) -> int:
        return int(self.positions.shape[0])

    def point(self, i: int) -> Point:
        return Point(float(self.positions[i, 0]), float(self.positions[i, 1]))

    def points(self):
        for i in range(self.count):
            yield self.point(i)

    def to_csv(self, path) -> None:
        """Write x,y rows with shortest round-trip decimal representation."""
        with open(path, "w") as fh:
            fh.write("x,y\n")
            for x, y in self.positions:
                fh.write(f"{float(x)!r},{float(y)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "NodeSet":
        rows = []
        with open(path) as fh:
            header = fh.readline().strip()
            if header != "x,y":
                raise ValueError(f"unexpected node CSV header: {header}")
            for line in fh:
                xs, ys = line.strip().split(",")
                rows.append((float(xs), float(ys)))
        arr = np.array(rows, dtype=np.float64) if rows else np.empty((0, 2))
        return cls(positions=arr)


def sample_ppp(density: float, seed: int) -> NodeSet:
    """Homogeneous Poisson point process on the unit square.

    The number of nodes is Poisson(density) and positions are iid uniform.
    Identical (density, seed) always reproduces the same node set.
    """
    if density < 0:
        raise ValueError(f"density must be nonnegative, got {density}")
    rng = np.random.default_rng(seed)
    count = int(rng.poisson(density))
    positions = rng.random((count, 2))
    return NodeSet(positions=positions)
