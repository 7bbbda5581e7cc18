"""Region construction, clustering against a brute-force oracle, and masks."""

import math

import numpy as np
import pytest

from hetnetsim.deployment import Model, ScalingConfig, deploy
from hetnetsim.geometry import CellIndex, build_grid
from hetnetsim.regions import (
    Region,
    RegionKind,
    avoidance_half_width,
    bordering_mask,
    bs_preservation_half_width,
    build_avoidance_regions,
    build_preservation_regions,
    build_region_set,
    cluster_components,
    free_cell_graph,
)


def brute_force_clusters(regions, grid):
    """Reference decomposition: pairwise rectangle adjacency plus DFS.

    Kept deliberately naive (O(regions^2)) and structurally unlike the
    union-find in the implementation.
    """
    rects = [r.rect(grid) for r in regions]

    def touching(a, b):
        # gap of at most one cell in both axes, so overlap or 8-contact
        return not (
            b[0] > a[1] + 1 or a[0] > b[1] + 1 or b[2] > a[3] + 1 or a[2] > b[3] + 1
        )

    n = len(regions)
    seen = [False] * n
    clusters = []
    for start in range(n):
        if seen[start]:
            continue
        stack, group = [start], []
        seen[start] = True
        while stack:
            i = stack.pop()
            group.append(i)
            for j in range(n):
                if not seen[j] and touching(rects[i], rects[j]):
                    seen[j] = True
                    stack.append(j)
        clusters.append(frozenset(group))
    return set(clusters)


def random_preservation_set(rng, s):
    grid = build_grid(1.0 / s ** 2)
    count = int(rng.integers(1, 30))
    regions = [
        Region(
            RegionKind.PRESERVE_PRIMARY,
            CellIndex(int(rng.integers(0, s)), int(rng.integers(0, s))),
            int(rng.integers(0, 3)),
        )
        for _ in range(count)
    ]
    return regions, grid


def test_cluster_components_match_brute_force():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        s = int(rng.integers(8, 17))
        regions, grid = random_preservation_set(rng, s)
        rs = build_region_set(regions, grid)
        got = {frozenset(c) for c in cluster_components(rs).clusters}
        assert got == brute_force_clusters(regions, grid)


def test_cluster_max_size_and_projection():
    grid = build_grid(1.0 / 100.0)
    regions = [
        Region(RegionKind.PRESERVE_PRIMARY, CellIndex(1, 1), 1),
        Region(RegionKind.PRESERVE_PRIMARY, CellIndex(4, 1), 1),  # touches the first
        Region(RegionKind.PRESERVE_PRIMARY, CellIndex(8, 8), 1),  # isolated
    ]
    decomp = cluster_components(build_region_set(regions, grid))
    assert decomp.max_size == 2
    assert {frozenset(c) for c in decomp.clusters} == {frozenset({0, 1}), frozenset({2})}
    # the merged cluster spans rows 0..2 regardless of column extent
    assert set(decomp.projection_lengths) == {3}


def test_cluster_order_invariance():
    rng = np.random.default_rng(7)
    regions, grid = random_preservation_set(rng, 12)
    base = brute_force_clusters(regions, grid)
    for _ in range(5):
        perm = list(rng.permutation(len(regions)))
        shuffled = [regions[i] for i in perm]
        got = {
            frozenset(perm[i] for i in c)
            for c in cluster_components(build_region_set(shuffled, grid)).clusters
        }
        assert got == base


def test_cluster_rejects_mixed_kinds():
    grid = build_grid(1.0 / 64.0)
    regions = [
        Region(RegionKind.PRESERVE_PRIMARY, CellIndex(2, 2), 1),
        Region(RegionKind.PRESERVE_BS, CellIndex(5, 5), 0),
    ]
    with pytest.raises(ValueError, match="preserve_bs"):
        cluster_components(build_region_set(regions, grid))


def test_cluster_empty_region_set():
    decomp = cluster_components(build_region_set([], build_grid(1.0 / 16.0)))
    assert decomp.max_size == 0
    assert decomp.clusters == ()


def test_avoidance_half_width_frozen():
    # cell-area ratio 400, fraction 1/4: sqrt(100) = 10 wide -> k = 5
    a_s = 2.5e-4
    assert avoidance_half_width(0.25, 400.0 * a_s, a_s) == 5
    # fraction covering a single secondary cell collapses to k = 0
    assert avoidance_half_width(0.01, 100.0 * a_s, a_s) == 0


def test_bs_preservation_smaller_than_avoidance():
    """The log(n) shrink factor must never produce a larger square."""
    for n in [50.0, 200.0, 1000.0]:
        for ratio in [50.0, 400.0, 3000.0]:
            a_s = 1.0 / ratio
            k_avoid = avoidance_half_width(0.25, 1.0, a_s)
            k_bs = bs_preservation_half_width(0.25, n, 1.0, a_s)
            assert k_bs <= k_avoid


def test_region_rect_clips_at_boundary():
    grid = build_grid(1.0 / 100.0)
    r = Region(RegionKind.PRESERVE_PRIMARY, CellIndex(0, 9), 1)
    assert r.rect(grid) == (0, 1, 8, 9)
    assert len(list(r.cells(grid))) == 4


def test_preservation_regions_cover_every_primary_node():
    inst = deploy(ScalingConfig(n=30.0, beta=2.0), seed=11)
    rs = build_preservation_regions(inst)
    grid = inst.secondary_grid
    assert all(r.half_width == 1 for r in rs.regions)
    assert len(rs.regions) == inst.primary.count
    from hetnetsim.geometry import cell_of

    for p in inst.primary.points():
        assert rs.is_blocked(cell_of(p, grid))


def test_preservation_rejects_too_coarse_grid():
    # n=3, beta=1.1 yields a secondary grid of a single cell
    inst = deploy(ScalingConfig(n=3.0, beta=1.1), seed=0)
    assert inst.secondary_grid.cells_per_side < 3
    with pytest.raises(ValueError, match="too .*coarse|coarse"):
        build_preservation_regions(inst)


def test_infrastructure_adds_bs_preservation_squares():
    cfg = ScalingConfig(n=60.0, beta=2.2, gamma=0.7, model=Model.INFRASTRUCTURE)
    inst = deploy(cfg, seed=5)
    rs = build_preservation_regions(inst)
    kinds = {r.kind for r in rs.regions}
    assert kinds == {RegionKind.PRESERVE_PRIMARY, RegionKind.PRESERVE_BS}
    assert sum(r.kind is RegionKind.PRESERVE_BS for r in rs.regions) == inst.l


def test_avoidance_regions_disjoint_and_centered():
    cfg = ScalingConfig(n=60.0, beta=2.2, gamma=0.7, model=Model.INFRASTRUCTURE)
    inst = deploy(cfg, seed=5)
    av = build_avoidance_regions(inst)
    assert len(av.regions) == inst.l
    total = sum(len(list(r.cells(inst.secondary_grid))) for r in av.regions)
    # disjointness was enforced during construction
    assert total == av.num_blocked


def test_avoidance_overlap_rejected_with_diagnostic():
    # coarse secondary grid, wide fraction: neighboring squares collide
    cfg = ScalingConfig(n=40.0, beta=2.0, gamma=0.7, delta_a=0.9, model=Model.INFRASTRUCTURE)
    inst = deploy(cfg, seed=1)
    with pytest.raises(ValueError, match="delta_a"):
        build_avoidance_regions(inst)


def test_avoidance_requires_infrastructure():
    inst = deploy(ScalingConfig(n=40.0, beta=2.0), seed=1)
    with pytest.raises(ValueError, match="infrastructure"):
        build_avoidance_regions(inst)


def test_free_cell_graph_unobstructed():
    grid = build_grid(1.0 / 9.0)
    fg = free_cell_graph(build_region_set([], grid))
    assert fg.num_free == 9
    assert fg.num_components == 1
    # interior 4-adjacency of a 3x3 block
    assert fg.num_edges == 12
    assert fg.reachable(CellIndex(0, 0), CellIndex(2, 2))


def test_free_cell_graph_ring_around_obstacle():
    grid = build_grid(1.0 / 81.0)
    rs = build_region_set([Region(RegionKind.PRESERVE_PRIMARY, CellIndex(4, 4), 1)], grid)
    fg = free_cell_graph(rs)
    assert fg.num_free == 72
    assert fg.num_components == 1
    assert fg.component_of(CellIndex(4, 4)) == -1
    assert fg.reachable(CellIndex(0, 0), CellIndex(8, 8))
    assert not fg.reachable(CellIndex(0, 0), CellIndex(4, 4))


def test_free_cell_graph_split_by_wall():
    grid = build_grid(1.0 / 25.0)
    wall = [Region(RegionKind.PRESERVE_PRIMARY, CellIndex(2, r), 0) for r in range(5)]
    fg = free_cell_graph(build_region_set(wall, grid))
    assert fg.num_components == 2
    assert sorted(fg.component_sizes) == [10, 10]
    assert not fg.reachable(CellIndex(0, 2), CellIndex(4, 2))


def test_bordering_mask_is_the_dilation_ring():
    grid = build_grid(1.0 / 25.0)
    rs = build_region_set([Region(RegionKind.PRESERVE_PRIMARY, CellIndex(2, 2), 1)], grid)
    ring = bordering_mask(rs)
    assert int(ring.sum()) == 16
    assert not np.any(ring & rs.mask)
    # ring plus block tile the whole 5x5 grid in this layout
    assert int((ring | rs.mask).sum()) == 25


def test_region_set_pbm_round_trip(tmp_path):
    grid = build_grid(1.0 / 16.0)
    rs = build_region_set([Region(RegionKind.PRESERVE_PRIMARY, CellIndex(1, 2), 1)], grid)
    path = tmp_path / "regions.pbm"
    rs.write_pbm(path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "P1"
    body = [line for line in lines[1:] if not line.startswith("#")]
    assert body[0] == "4 4"
    grid_bits = [[int(tok) for tok in line.split()] for line in body[1:]]
    # PBM rows run top to bottom; row 0 of the mask is the bottom line
    parsed = np.array(grid_bits[::-1], dtype=bool)
    assert np.array_equal(parsed, rs.mask)


def test_region_set_json_schema(tmp_path):
    import json

    grid = build_grid(1.0 / 16.0)
    rs = build_region_set([Region(RegionKind.AVOIDANCE, CellIndex(1, 1), 1)], grid)
    path = tmp_path / "regions.json"
    rs.write_json(path)
    payload = json.loads(path.read_text())
    assert payload["schema_version"] == 1
    assert payload["regions"][0]["kind"] == "avoidance"
