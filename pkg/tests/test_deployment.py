"""Configuration validation, derived densities, and network deployment."""

import math

import numpy as np
import pytest

from hetnetsim.deployment import (
    Model,
    ScalingConfig,
    deploy,
    derive_densities,
    pair_random,
    primary_cell_area,
    round_half_up,
    secondary_cell_area,
)
from hetnetsim.geometry import cell_of


def test_round_half_up_frozen_cases():
    assert round_half_up(4.5) == 5
    assert round_half_up(3.5) == 4
    assert round_half_up(2.4) == 2
    assert round_half_up(2.6) == 3
    assert round_half_up(0.0) == 0
    assert round_half_up(-0.5) == 0
    assert round_half_up(-0.6) == -1


def test_derive_densities_frozen():
    m, l = derive_densities(ScalingConfig(n=200.0, beta=1.5, gamma=0.6))
    assert m == pytest.approx(200.0 ** 1.5)
    # 200**0.3 = 4.90...; rounds to 5, squared to 25
    assert l == 25
    _, l2 = derive_densities(ScalingConfig(n=1000.0, beta=1.5, gamma=0.5))
    # 1000**0.25 = 5.62... -> 6
    assert l2 == 36


def test_derive_densities_l_at_least_one():
    _, l = derive_densities(ScalingConfig(n=3.0, beta=1.5, gamma=0.1))
    assert l == 1


@pytest.mark.parametrize(
    "field,value,needle",
    [
        ("n", 2.0, "n"),
        ("beta", 1.0, "beta"),
        ("gamma", 0.0, "gamma"),
        ("gamma", 1.0, "gamma"),
        ("alpha", 2.0, "alpha"),
        ("delta_loss", 1.0, "delta_loss"),
        ("delta_p", 0.0, "delta_p"),
        ("delta_p", 1.2, "delta_p"),
        ("delta_a", 0.0, "delta_a"),
        ("delta_t", 1.0, "delta_t"),
        ("epsilon", 0.0, "epsilon"),
        ("power", 0.0, "power"),
        ("noise", -1.0, "noise"),
    ],
)
def test_validate_names_the_violated_field(field, value, needle):
    cfg = ScalingConfig(**{field: value})
    with pytest.raises(ValueError, match=needle):
        cfg.validate()


def test_config_dict_round_trip():
    cfg = ScalingConfig(n=120.0, beta=2.0, gamma=0.4, model=Model.INFRASTRUCTURE)
    assert ScalingConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.to_dict()["model"] == "infrastructure"


def test_config_rejects_unknown_keys():
    with pytest.raises(TypeError):
        ScalingConfig.from_dict({"n": 100.0, "bandwidth": 5.0})


def test_from_dict_validates():
    with pytest.raises(ValueError, match="beta"):
        ScalingConfig.from_dict({"n": 100.0, "beta": 0.5})


def test_secondary_grid_always_finer():
    """a_s < a_p whenever beta > 1, so preservation squares fit."""
    for n in [3.0, 10.0, 100.0, 2000.0]:
        for beta in [1.05, 1.5, 2.0, 3.0]:
            assert secondary_cell_area(n ** beta) < primary_cell_area(n)


def test_pair_random_is_a_matching():
    for seed in range(6):
        nodes = deploy(ScalingConfig(n=80.0), seed=seed, include_secondary=False).primary
        pairing = pair_random(nodes, seed=seed + 50)
        used = [i for pair in pairing.pairs() for i in pair]
        assert len(used) == len(set(used))
        assert pairing.num_pairs == nodes.count // 2
        assert all(0 <= i < nodes.count for i in used)


def test_pair_random_deterministic():
    nodes = deploy(ScalingConfig(n=60.0), seed=4, include_secondary=False).primary
    assert pair_random(nodes, seed=9).pairs() == pair_random(nodes, seed=9).pairs()
    assert pair_random(nodes, seed=9).pairs() != pair_random(nodes, seed=10).pairs()


def test_pair_count_rarely_falls_short():
    """At n >= 500 at least (1-eps)n/2 pairs form in >= 95% of trials."""
    n, eps, trials = 500.0, 0.1, 60
    floor = (1.0 - eps) * n / 2.0
    good = 0
    for t in range(trials):
        inst = deploy(ScalingConfig(n=n), seed=7000 + t, include_secondary=False)
        if inst.primary_pairs.num_pairs >= floor:
            good += 1
    assert good / trials >= 0.95


def test_deploy_populates_both_networks():
    inst = deploy(ScalingConfig(n=50.0, beta=1.5), seed=1)
    assert inst.primary.count > 0
    assert inst.secondary.count > inst.primary.count
    assert inst.m == pytest.approx(50.0 ** 1.5)
    assert inst.secondary_pairs is not None


def test_deploy_without_secondary_leaves_primary_untouched():
    full = deploy(ScalingConfig(n=50.0, beta=1.5), seed=12)
    bare = deploy(ScalingConfig(n=50.0, beta=1.5), seed=12, include_secondary=False)
    assert np.array_equal(full.primary.positions, bare.primary.positions)
    assert full.primary_pairs.pairs() == bare.primary_pairs.pairs()
    assert bare.secondary.count == 0 and bare.secondary_pairs is None


def test_deploy_infrastructure_lattice():
    """Exactly one base station at the center of every lattice cell."""
    cfg = ScalingConfig(n=100.0, beta=1.5, gamma=0.6, model=Model.INFRASTRUCTURE)
    inst = deploy(cfg, seed=3)
    assert inst.bs_positions.shape == (inst.l, 2)
    grid = inst.bs_grid
    assert grid.num_cells == inst.l
    seen = set()
    for x, y in inst.bs_positions:
        cell = cell_of((float(x), float(y)), grid)
        center = grid.center(cell)
        assert x == pytest.approx(center.x, abs=1e-12)
        assert y == pytest.approx(center.y, abs=1e-12)
        seen.add(cell)
    assert len(seen) == inst.l


def test_deploy_adhoc_has_no_lattice():
    inst = deploy(ScalingConfig(n=50.0), seed=3)
    assert inst.bs_positions.shape[0] == 0
    assert inst.model is Model.AD_HOC


def test_deploy_deterministic_across_calls():
    a = deploy(ScalingConfig(n=70.0, beta=1.6), seed=21)
    b = deploy(ScalingConfig(n=70.0, beta=1.6), seed=21)
    assert np.array_equal(a.primary.positions, b.primary.positions)
    assert np.array_equal(a.secondary.positions, b.secondary.positions)
    assert a.secondary_pairs.pairs() == b.secondary_pairs.pairs()


def test_instance_json_has_schema_version(tmp_path):
    inst = deploy(ScalingConfig(n=40.0), seed=2)
    path = tmp_path / "instance.json"
    inst.write_json(path)
    import json

    payload = json.loads(path.read_text())
    assert payload["schema_version"] == 1
    assert payload["config"]["n"] == 40.0


def test_cell_areas_use_natural_log():
    assert primary_cell_area(math.e) == pytest.approx(2.0 / math.e)
    m = math.e ** 2
    assert secondary_cell_area(m) == pytest.approx(4.0 / m)
