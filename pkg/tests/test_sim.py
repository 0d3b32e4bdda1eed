import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavharvest import (
    Scenario,
    SimEstimate,
    coverage_estimate,
    coverage_probability,
    empirical_laplace,
    harvest_passage_estimate,
    load_config,
    sample_slot,
    sample_snapshot_stationary,
    simulate_passages,
    snapshot_shot_noise,
)
from uavharvest.sim import default_slot_duration, slot_powers

CFG = load_config({"lambda": "10/km2", "mu": "1 km", "w": "0.2 km", "l": "0.5 km", "h": "0.2 km", "alpha": 4,
                   "tau": 1})
DENSE = load_config({"alpha": 3.5, "h": "0.2 km", "mu": "2 km", "l": "0.5 km", "v": "30 m/s",
                     "lambda": "1000/km2", "w": "0.5 km", "tau": 1})


def test_same_seed_same_samples():
    a = slot_powers(Scenario(CFG, seed=4, k_sim=8), 3000)
    b = slot_powers(Scenario(CFG, seed=4, k_sim=8), 3000)
    c = slot_powers(Scenario(CFG, seed=5, k_sim=8), 3000)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    assert not np.array_equal(a[2], c[2])


def test_trial_counter_addresses_one_slot():
    sc = Scenario(CFG, seed=1, k_sim=4)
    occ, S, I = slot_powers(sc, 5000)
    slot = sample_slot(sc, 4321)
    assert slot.signal == pytest.approx(S[4321])
    assert slot.interference == pytest.approx(I[4321])
    assert bool(slot.occupied[0]) == bool(occ[4321])


def test_more_windows_only_add_interference():
    small = slot_powers(Scenario(CFG, seed=2, k_sim=3), 4096)
    large = slot_powers(Scenario(CFG, seed=2, k_sim=9), 4096)
    assert np.array_equal(small[1], large[1])
    assert np.all(large[2] >= small[2])


def test_occupancy_frequency():
    sc = Scenario(CFG, seed=3, k_sim=0)
    occ, _, _ = slot_powers(sc, 100_000)
    est = SimEstimate.from_samples("occupancy", occ, sc.seed)
    assert est.agrees(CFG.occupancy, 3.0)


def test_slot_sample_structure():
    slot = sample_slot(Scenario(CFG, seed=8, k_sim=5), 17)
    assert slot.i[0] == 0 and slot.j[0] == 0
    assert len(slot.i) == 11
    empty = ~slot.occupied
    assert np.all(np.isnan(slot.x[empty])) and np.all(slot.power[empty] == 0)
    inside = np.abs(slot.x[~empty] - slot.i[~empty] * CFG.mu) <= CFG.w / 2
    assert np.all(inside)
    assert slot.shot_noise == pytest.approx(slot.signal + slot.interference)


def test_no_devices_no_shot_noise():
    _, S, I = slot_powers(Scenario(CFG.replace(lam=0.0), k_sim=4), 2048)
    assert not S.any() and not I.any()


def test_laplace_at_zero_is_exactly_one():
    est = empirical_laplace(Scenario(CFG, k_sim=4), [0.0], trials=2000)[0]
    assert est.mean == 1.0 and est.std_error == 0.0


def test_interference_estimate_dominates_shot_noise_estimate():
    sc = Scenario(CFG, seed=6, k_sim=8)
    grid = np.geomspace(1e8, 1e11, 6)
    li = empirical_laplace(sc, grid, 5000, exclude_center=True)
    ln = empirical_laplace(sc, grid, 5000, exclude_center=False)
    assert all(a.mean >= b.mean for a, b in zip(li, ln))


@given(st.lists(st.floats(0.01, 100), min_size=2, max_size=6, unique=True))
@settings(max_examples=10, deadline=None)
def test_coverage_nonincreasing_in_threshold(taus):
    taus = sorted(taus)
    est = coverage_estimate(Scenario(CFG, seed=7, k_sim=8), 2048, tau=taus)
    means = [e.mean for e in est]
    assert all(a >= b for a, b in zip(means, means[1:]))


def test_small_threshold_gives_occupancy():
    est = coverage_estimate(Scenario(CFG, seed=9, k_sim=8), 50_000, tau=1e-9)
    assert est.agrees(CFG.occupancy, 3.0)


def test_too_few_trials_rejected():
    with pytest.raises(ValueError, match="trials"):
        coverage_estimate(Scenario(CFG), 10)


def test_coverage_agrees_with_analytic():
    cfg = CFG.replace(tau=3.0)
    sc = Scenario(cfg, seed=10)
    est = coverage_estimate(sc, 50_000)
    exact = coverage_probability(cfg)
    assert est.agrees(exact.value, 3.0, exact.error)


def test_nakagami_coverage_agrees_with_analytic():
    cfg = CFG.replace(m=2, tau=2.0, lam=1e-4)
    est = coverage_estimate(Scenario(cfg, seed=11), 50_000)
    exact = coverage_probability(cfg)
    assert est.agrees(exact.value, 3.0, exact.error)


def test_truncation_bias_shrinks_with_more_windows():
    assert Scenario(CFG, k_sim=8).truncation_bias() > Scenario(CFG, k_sim=64).truncation_bias()
    assert Scenario(CFG, k_sim=0).truncation_bias() == math.inf


def test_selection_is_uniform_among_window_devices():
    sc = Scenario(DENSE.replace(lam=4e-6), seed=12)
    _, _, _, rec = simulate_passages(sc, trials=4000, details=True)
    count, selected = rec["count"].ravel(), rec["selected"].ravel()
    for k in (1, 2, 3):
        mask = count == k
        est = SimEstimate.from_samples("selected", selected[mask], 0)
        assert est.agrees(1.0 / k, 4.0)


def test_passage_slot_layout():
    ts = default_slot_duration(DENSE)
    D, ts_used, n_slots = simulate_passages(Scenario(DENSE, seed=1), trials=100)
    assert ts_used == ts and n_slots == 41
    assert D.shape == (100,)
    assert np.all(D <= n_slots * ts + 1e-12)


def test_coarse_slots_warn():
    with pytest.warns(RuntimeWarning, match="coarse"):
        simulate_passages(Scenario(DENSE), slot_duration=DENSE.w / DENSE.v / 3, trials=10)


@pytest.mark.slow
def test_halving_slot_duration_is_stable():
    sc = Scenario(DENSE, seed=13)
    ts = default_slot_duration(DENSE)
    a = harvest_passage_estimate(sc, ts, trials=4000)
    b = harvest_passage_estimate(sc, ts / 2, trials=4000)
    assert abs(a.mean - b.mean) < 3 * math.hypot(a.std_error, b.std_error)


def test_snapshot_with_zero_shift_is_palm_geometry():
    sc = Scenario(CFG, seed=14, k_sim=4)
    snap = sample_snapshot_stationary(sc, 0.0, 3, shift=(0.0, 0.0))
    assert snap.uav == (0.0, 0.0)
    occ = snap.occupied
    assert np.all(np.abs(snap.x[occ] - snap.i[occ] * CFG.mu) <= CFG.w / 2)


def test_snapshot_moves_with_the_fleet():
    sc = Scenario(CFG, seed=15, k_sim=4)
    snap = sample_snapshot_stationary(sc, 20.0, 0)
    ux = snap.uav[0]
    occ = snap.occupied
    assert np.all(np.abs(snap.x[occ] - ux - snap.i[occ] * CFG.mu) <= CFG.w / 2 + 1e-9)
    assert snapshot_shot_noise(sc, 20.0, 10).shape == (10,)


def test_confidence_interval():
    est = SimEstimate.from_samples("x", np.arange(100.0), 0)
    lo, hi = est.ci(0.95)
    assert lo < est.mean < hi
    assert hi - lo == pytest.approx(2 * 1.959964 * est.std_error, rel=1e-5)


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario(CFG, seed=-1)
    with pytest.raises(ValueError):
        Scenario(CFG, k_sim=-2)
    assert Scenario(CFG.replace(mode="2d", nu=1000.0)).k_sim == 16
