"""Interference constants, rate floors, scheduling, and slot evaluation."""

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from hetnetsim.deployment import ScalingConfig
from hetnetsim.geometry import CellIndex, Point, build_grid
from hetnetsim.phy import (
    NodeKind,
    evaluate_slot,
    max_secondary_power_fraction,
    rate_constants,
    schedule_9tdma,
    slot_rates,
    tx_power,
    worst_case_interference_adhoc,
    worst_case_interference_infra,
)


def direct_ring_sum(power, alpha, gap, offset, terms=10 ** 6):
    """Long-summation oracle for the ring interference series."""
    t = np.arange(1, terms + 1, dtype=np.float64)
    return power * 2.0 ** (alpha / 2.0 + 3.0) * float(np.sum(t * (gap * t - offset) ** (-alpha)))


def test_interference_series_against_long_summation():
    for alpha in [3.0, 4.0, 5.0]:
        want = direct_ring_sum(1.0, alpha, gap=3, offset=2)
        got = worst_case_interference_adhoc(1.0, alpha)
        assert got == pytest.approx(want, rel=1e-6)
        want = direct_ring_sum(1.0, alpha, gap=2, offset=1)
        got = worst_case_interference_infra(1.0, alpha)
        assert got == pytest.approx(want, rel=1e-6)


def test_interference_frozen_values():
    # one active cell in nine, unit power, alpha = 4
    assert worst_case_interference_adhoc(1.0, 4.0) == pytest.approx(32.31, abs=0.01)
    # every cell active: rings sit closer, slightly more interference
    assert worst_case_interference_infra(1.0, 4.0) == pytest.approx(33.06, abs=0.01)
    assert worst_case_interference_infra(1.0, 4.0) > worst_case_interference_adhoc(1.0, 4.0)


def test_interference_scales_with_power():
    one = worst_case_interference_adhoc(1.0, 4.0)
    assert worst_case_interference_adhoc(2.5, 4.0) == pytest.approx(2.5 * one, rel=1e-9)


def test_interference_rejects_alpha_at_most_two():
    with pytest.raises(ValueError, match="alpha"):
        worst_case_interference_adhoc(1.0, 2.0)


def test_power_fraction_zero_tolerance_is_exactly_zero():
    interference = worst_case_interference_adhoc(1.0, 4.0)
    assert max_secondary_power_fraction(1.0, 1.0, 0.0, interference) == 0.0


def test_power_fraction_against_root_solve():
    """The closed form must agree with numerically inverting the rate ratio.

    The defining equation: secondary interference delta*I at the primary
    receiver shrinks its rate to exactly (1 - delta_loss) of the clean rate.
    """
    for power, noise, loss in [(1.0, 1.0, 0.1), (2.0, 0.5, 0.05), (1.0, 1.0, 0.3)]:
        interference = worst_case_interference_adhoc(power, 4.0)

        def gap(delta):
            clean = math.log2(1.0 + power / noise)
            dirty = math.log2(1.0 + power / (noise + delta * interference))
            return dirty - (1.0 - loss) * clean

        want = brentq(gap, 0.0, 1e9, xtol=1e-15, rtol=1e-14)
        got = max_secondary_power_fraction(power, noise, loss, interference)
        assert got == pytest.approx(want, rel=1e-10)


def test_power_fraction_preconditions():
    with pytest.raises(ValueError, match="delta_loss"):
        max_secondary_power_fraction(1.0, 1.0, 1.0, 30.0)
    with pytest.raises(ValueError):
        max_secondary_power_fraction(1.0, 1.0, 0.1, 0.0)


def test_rate_constants_match_independent_evaluation():
    """Every K recomputed from scratch, off the shared code path."""
    cfg = ScalingConfig(n=200.0, beta=1.5, gamma=0.6, delta_loss=0.1)
    m = 200.0 ** 1.5
    pc = rate_constants(cfg, m)
    p, n0, alpha = 1.0, 1.0, 4.0
    i1 = pc.interference_adhoc
    i2 = pc.interference_infra
    frac = pc.power_fraction

    assert pc.rate_primary_adhoc == pytest.approx(
        (1.0 / 9.0) * math.log2(1.0 + p / (n0 + i1)), abs=1e-12
    )
    assert pc.rate_secondary_adhoc == pytest.approx(
        (1.0 / 27.0)
        * math.log2(1.0 + frac * p / (n0 + (1.0 + frac) * i1 + 2.0 ** (1.5 * alpha) * p)),
        abs=1e-12,
    )
    assert pc.rate_primary_infra == pytest.approx(
        math.log2(1.0 + p / (n0 + i2)), abs=1e-12
    )
    near = p * (2.0 * math.log(m) / (1.5 * 0.25)) ** 2.0
    far = p * (2.0 / 0.25) ** 2.0
    cross = n0 + i2 + frac * i1
    assert pc.rate_secondary_infra_inside == pytest.approx(
        (0.5 / 18.0) * math.log2(1.0 + frac * p / (cross + near)), abs=1e-12
    )
    assert pc.rate_secondary_infra_outside == pytest.approx(
        (0.5 / 18.0) * math.log2(1.0 + frac * p / (cross + far)), abs=1e-12
    )


def test_rate_constants_default_power_fraction():
    cfg = ScalingConfig(n=200.0)
    pc = rate_constants(cfg, 200.0 ** 1.5)
    assert pc.power_fraction == pytest.approx(0.9 * min(pc.max_power_fraction, 1.0))


def test_rate_constants_rejects_excessive_fraction():
    cfg = ScalingConfig(n=200.0, delta_p=1.0)
    cap = rate_constants(ScalingConfig(n=200.0), 200.0 ** 1.5).max_power_fraction
    if cap < 1.0:
        with pytest.raises(ValueError, match="delta_p"):
            rate_constants(cfg, 200.0 ** 1.5)


def test_rate_constants_rejects_tiny_m():
    with pytest.raises(ValueError, match="m|density"):
        rate_constants(ScalingConfig(n=200.0), 1.0)


def test_inside_avoidance_floor_decreases_with_density():
    cfg = ScalingConfig(n=200.0, beta=1.5, gamma=0.6)
    values = [rate_constants(cfg, m).rate_secondary_infra_inside for m in
              [50.0, 500.0, 5000.0, 50000.0]]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_schedule_phase_partition():
    grid = build_grid(1.0 / 49.0)
    sched = schedule_9tdma(grid)
    for col in range(7):
        for row in range(7):
            assert sched.phase_of(CellIndex(col, row)) == (col % 3) + 3 * (row % 3)
    all_cells = [c for ph in range(9) for c in sched.cells_in_phase(ph)]
    assert len(all_cells) == grid.num_cells
    assert len(set(all_cells)) == grid.num_cells


def test_schedule_active_cells_never_adjacent():
    grid = build_grid(1.0 / 100.0)
    sched = schedule_9tdma(grid)
    for ph in range(9):
        cells = sched.cells_in_phase(ph)
        for i, a in enumerate(cells):
            for b in cells[i + 1 :]:
                assert max(abs(a.col - b.col), abs(a.row - b.row)) >= 3


def test_schedule_rejects_bad_arguments():
    grid = build_grid(1.0 / 9.0)
    with pytest.raises(ValueError, match="phase"):
        schedule_9tdma(grid).cells_in_phase(9)
    with pytest.raises(ValueError, match="secondary_repeat"):
        schedule_9tdma(grid, secondary_repeat=0)


def test_tx_power_frozen():
    cfg = ScalingConfig(n=100.0)
    d = math.sqrt(2.0 * 2.0 * math.log(100.0) / 100.0)  # one cell diagonal
    watts, clamped = tx_power(d, NodeKind.PRIMARY, cfg)
    assert watts == pytest.approx(d ** 4, rel=1e-12)
    assert watts == pytest.approx(0.033932, abs=1e-5)
    assert not clamped


def test_tx_power_secondary_scales_by_fraction():
    cfg = ScalingConfig(n=100.0)
    base, _ = tx_power(0.3, NodeKind.PRIMARY, cfg)
    scaled, _ = tx_power(0.3, NodeKind.SECONDARY, cfg, power_fraction=0.5)
    assert scaled == pytest.approx(0.5 * base, rel=1e-12)


def test_tx_power_clamps_at_budget():
    cfg = ScalingConfig(n=100.0)
    watts, clamped = tx_power(1.2, NodeKind.PRIMARY, cfg)
    assert watts == cfg.power
    assert clamped


def test_tx_power_preconditions():
    cfg = ScalingConfig(n=100.0)
    with pytest.raises(ValueError, match="distance"):
        tx_power(-0.1, NodeKind.PRIMARY, cfg)
    with pytest.raises(ValueError, match="fraction"):
        tx_power(0.3, NodeKind.SECONDARY, cfg)  # cfg.delta_p is None


def test_slot_rates_single_link_is_exact_shannon():
    cfg = ScalingConfig(n=100.0)
    d = 0.25
    samples = evaluate_slot([(Point(0.1, 0.1), Point(0.1 + d, 0.1), 0.7)], cfg)
    want = math.log2(1.0 + 0.7 * d ** -4.0 / cfg.noise)
    assert samples[0].rate == pytest.approx(want, rel=1e-12)


def test_slot_rates_rejects_zero_length_link():
    p = Point(0.3, 0.3)
    with pytest.raises(ValueError, match="co-located"):
        evaluate_slot([(p, p, 1.0)], ScalingConfig(n=100.0))


def test_slot_rates_silent_transmitter_contributes_nothing():
    cfg = ScalingConfig(n=100.0)
    rx = Point(0.5, 0.1)
    alone = evaluate_slot([(Point(0.1, 0.1), rx, 1.0)], cfg)
    # a muted co-located interferer must not poison the SINR with 0 * inf
    muted = evaluate_slot([(Point(0.1, 0.1), rx, 1.0), (rx, Point(0.9, 0.9), 0.0)], cfg)
    assert muted[0].rate == pytest.approx(alone[0].rate, rel=1e-12)
    assert muted[1].rate == 0.0


def random_slot(rng, links):
    tx = rng.random((links, 2))
    rx = rng.random((links, 2))
    # retry collisions so the slot is valid
    while np.any(np.all(tx == rx, axis=1)):
        rx = rng.random((links, 2))
    powers = rng.uniform(0.05, 1.0, size=links)
    return tx, rx, powers


def test_sinr_matches_naive_resummation():
    """Vectorized SINR versus a scalar double loop, ten random slots."""
    rng = np.random.default_rng(99)
    cfg = ScalingConfig(n=100.0)
    for _ in range(10):
        k = int(rng.integers(2, 9))
        tx, rx, powers = random_slot(rng, k)
        sinr, rate = slot_rates(tx, rx, powers, cfg.noise, cfg.alpha)
        for i in range(k):
            signal = powers[i] * math.dist(tx[i], rx[i]) ** -cfg.alpha
            noise = cfg.noise
            for j in range(k):
                if j != i:
                    noise += powers[j] * math.dist(tx[j], rx[i]) ** -cfg.alpha
            assert sinr[i] == pytest.approx(signal / noise, rel=1e-12)
            assert rate[i] == pytest.approx(math.log2(1.0 + signal / noise), rel=1e-12)


def test_muting_any_transmitter_never_hurts():
    rng = np.random.default_rng(123)
    cfg = ScalingConfig(n=100.0)
    for _ in range(8):
        k = int(rng.integers(3, 8))
        tx, rx, powers = random_slot(rng, k)
        _, base = slot_rates(tx, rx, powers, cfg.noise, cfg.alpha)
        for mute in range(k):
            keep = [i for i in range(k) if i != mute]
            _, thinned = slot_rates(tx[keep], rx[keep], powers[keep], cfg.noise, cfg.alpha)
            for pos, i in enumerate(keep):
                assert thinned[pos] >= base[i] - 1e-12


def test_evaluate_slot_preserves_order_and_empty():
    cfg = ScalingConfig(n=100.0)
    assert evaluate_slot([], cfg) == []
    links = [
        (Point(0.1, 0.2), Point(0.3, 0.2), 0.4),
        (Point(0.8, 0.9), Point(0.6, 0.7), 0.9),
    ]
    samples = evaluate_slot(links, cfg)
    assert [s.tx for s in samples] == [links[0][0], links[1][0]]
    assert [s.power for s in samples] == [0.4, 0.9]
