"""Analytic evaluators against independent brute-force oracles and invariants."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavharvest import (
    ConvergenceError,
    LaplaceEvaluator,
    ModulationRule,
    NetworkConfig,
    QuadratureSpec,
    conditional_coverage,
    coverage_probability,
    factor_window,
    harvested_data,
    laplace_derivative_sum,
    laplace_interference,
    laplace_interference_plus_noise,
    laplace_noise,
    laplace_shot_noise,
    load_config,
    mean_rate,
)

FIG3 = load_config({"lambda": "1000/km2", "mu": "2 km", "w": "0.25 km", "l": "0.5 km", "h": "0.25 km",
                    "alpha": 3})
FIG4 = load_config({"lambda": "100/km2", "mu": "1 km", "w": "0.25 km", "l": "0.5 km", "h": "0.2 km",
                    "alpha": 4, "tau": 10})


# --------------------------------------------------------------------------
# brute-force oracles (midpoint grids, written independently of the package)

def midpoint(a, b, n):
    return a + (np.arange(n) + 0.5) * (b - a) / n


def oracle_factor(cfg, s, i, n=1000):
    x = midpoint(i * cfg.mu - cfg.w / 2, i * cfg.mu + cfg.w / 2, n)
    y = midpoint(-cfg.l / 2, cfg.l / 2, n)
    X, Y = np.meshgrid(x, y)
    d_alpha = (X ** 2 + Y ** 2 + cfg.h ** 2) ** (cfg.alpha / 2)
    mean = np.mean((1 + s * cfg.p * cfg.omega / (cfg.m * d_alpha)) ** (-cfg.m))
    q0 = math.exp(-cfg.lam * cfg.w * cfg.l)
    return q0 + (1 - q0) * mean


def oracle_log_laplace(cfg, s, exclude_center, k=400, n=60):
    total = 0.0
    for i in range(-k, k + 1):
        if i == 0 and exclude_center:
            continue
        total += math.log(oracle_factor(cfg, s, i, 1000 if i == 0 else (n if abs(i) < 5 else 6)))
    return total


def oracle_rayleigh_coverage(cfg, n_outer=40, k=100):
    """m = 1: occupancy * mean over the serving window of prod_i f_i(tau * d0**alpha / p)."""
    x = midpoint(-cfg.w / 2, cfg.w / 2, n_outer)
    y = midpoint(-cfg.l / 2, cfg.l / 2, n_outer)
    X, Y = np.meshgrid(x, y)
    s = cfg.tau * (X ** 2 + Y ** 2 + cfg.h ** 2) ** (cfg.alpha / 2) / cfg.p
    logs = np.zeros_like(s)
    q0 = math.exp(-cfg.lam * cfg.w * cfg.l)
    u = midpoint(-cfg.w / 2, cfg.w / 2, 40)
    v = midpoint(-cfg.l / 2, cfg.l / 2, 40)
    U, V = np.meshgrid(u, v)
    for i in range(-k, k + 1):
        if i == 0:
            continue
        c = ((U + i * cfg.mu) ** 2 + V ** 2 + cfg.h ** 2) ** (-cfg.alpha / 2)
        inner = np.mean(1.0 / (1.0 + s[..., None, None] * cfg.p * c), axis=(-1, -2))
        logs += np.log(q0 + (1 - q0) * inner)
    return (1 - q0) * np.mean(np.exp(logs))


@pytest.mark.parametrize("i, s", [(1, 1e8), (2, 1e9), (0, 1e6), (-3, 5e9)])
def test_factor_matches_dense_grid(i, s):
    cfg = FIG3.replace(alpha=2.5)
    got = factor_window(cfg, s, i)
    ref = oracle_factor(cfg, s, i)
    assert 1 - got.value == pytest.approx(1 - ref, rel=1e-6)
    assert got.quad_error < 1e-6


def test_factor_trivial_cases():
    assert factor_window(FIG3, 0.0, 3).value == 1.0
    assert factor_window(FIG3.replace(lam=0.0), 1e9, 1).value == 1.0


@pytest.mark.parametrize("exclude", [True, False])
@pytest.mark.parametrize("s", [1e6, 1e7, 1e8])
def test_laplace_matches_brute_force_product(exclude, s):
    ev = LaplaceEvaluator(FIG3, exclude_center=exclude)
    got = ev.evaluate(s)
    ref = math.exp(oracle_log_laplace(FIG3, s, exclude))
    assert got.value == pytest.approx(ref, rel=1e-5)


def test_rayleigh_coverage_matches_direct_product():
    cfg = FIG4.replace(tau=1.0, mu=600.0)
    assert coverage_probability(cfg).value == pytest.approx(oracle_rayleigh_coverage(cfg), rel=2e-4)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_derivative_sum_against_finite_differences(m):
    cfg = FIG3.replace(m=m)
    ev = LaplaceEvaluator(cfg)
    s = 3e7
    k = (60, 0)  # same windows at every stencil point
    h = 2e-3 * s

    def L(x):
        g, _, _ = ev.log_derivatives(ev.sigma(x), 0, k=k)
        return math.exp(g[0, 0])

    f = {j: L(s + j * h) for j in range(-3, 4)}
    d1 = (f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * h)
    d2 = (-f[-2] + 16 * f[-1] - 30 * f[0] + 16 * f[1] - f[2]) / (12 * h ** 2)
    d3 = (f[-3] - 8 * f[-2] + 13 * f[-1] - 13 * f[1] + 8 * f[2] - f[3]) / (8 * h ** 3)
    terms = [f[0], -s * d1, s ** 2 / 2 * d2, -(s ** 3) / 6 * d3]
    ref = sum(terms[:m])
    assert ev.derivative_sum(s, m, k=k) == pytest.approx(ref, rel=1e-6)
    assert 0.0 < ref < 1.0


def test_derivative_sum_order_one_is_laplace():
    ev = LaplaceEvaluator(FIG3)
    assert laplace_derivative_sum(ev, 2e7, 1) == pytest.approx(ev.evaluate(2e7).value, rel=1e-14)


def test_derivative_cap():
    with pytest.raises(ValueError, match="cap"):
        laplace_derivative_sum(LaplaceEvaluator(FIG3), 1e6, 5)


configs = st.builds(
    lambda lam, frac, h, alpha, m: NetworkConfig(lam=lam, mu=1000.0, h=h, w=frac * 1000.0, l=400.0,
                                                 alpha=alpha, m=m),
    st.floats(1e-6, 1e-3), st.floats(0.05, 1.0), st.floats(50, 400), st.floats(2.2, 5), st.integers(1, 4),
)


@given(configs)
@settings(max_examples=15, deadline=None)
def test_normalization_and_monotonicity(cfg):
    scale = cfg.h ** cfg.alpha
    grid = np.geomspace(1e-3, 1e3, 50) * scale
    for exclude in (True, False):
        ev = LaplaceEvaluator(cfg, exclude_center=exclude)
        assert ev.evaluate(0.0).value == 1.0
        vals = ev.evaluate(grid).value
        assert np.all(np.diff(vals) <= 1e-12)
    li = laplace_interference(cfg, grid).value
    ln = laplace_shot_noise(cfg, grid).value
    assert np.all(li >= ln - 1e-12)
    noisy = laplace_interference_plus_noise(cfg, grid, noise=1e-3 / scale).value
    assert np.allclose(noisy, li * laplace_noise(grid, 1e-3 / scale), rtol=1e-12, atol=0)


@given(configs, st.floats(0.01, 100))
@settings(max_examples=15, deadline=None)
def test_coverage_bounded_by_occupancy(cfg, tau):
    cov = coverage_probability(cfg.replace(tau=tau))
    assert 0.0 <= cov.value <= cfg.occupancy + 1e-10


def test_coverage_tends_to_occupancy_for_small_threshold():
    cov = coverage_probability(FIG4.replace(tau=1e-6))
    assert cov.value == pytest.approx(FIG4.occupancy, abs=1e-5)


@given(st.floats(1e-3, 1e3), st.integers(1, 3))
@settings(max_examples=10, deadline=None)
def test_sir_invariant_to_power(scale, m):
    cfg = FIG4.replace(m=m)
    a = coverage_probability(cfg).value
    b = coverage_probability(cfg.replace(p=cfg.p * scale)).value
    assert abs(a - b) <= 1e-12


def test_reference_distance_only_rescales_laplace_argument():
    cfg = FIG3.replace(d_ref=1000.0)
    s = 0.05
    assert laplace_shot_noise(cfg, s).value == pytest.approx(
        laplace_shot_noise(FIG3, s * 1000.0 ** FIG3.alpha).value, rel=1e-12)
    assert coverage_probability(cfg).value == pytest.approx(coverage_probability(FIG3).value, abs=1e-12)


def test_coverage_decreases_with_window_length():
    vals = [coverage_probability(FIG4.replace(w=w)).value for w in np.linspace(125, 1000, 8)]
    assert np.all(np.diff(vals) < 0)


def test_degenerate_configs():
    assert coverage_probability(FIG4.replace(w=0.0)).value == 0.0
    assert coverage_probability(FIG4.replace(lam=0.0)).value == 0.0
    assert harvested_data(FIG4.replace(w=0.0)).value == 0.0
    # with no background devices the typical device is always scheduled
    lone = FIG4.replace(lam=0.0, tau=0.5)
    cond = conditional_coverage(lone).value
    assert harvested_data(lone, ModulationRule("shannon")).value == pytest.approx(
        math.log2(1.5) * lone.w / lone.v * cond)


def test_rate_uses_modulation_bits():
    cfg = FIG4.replace(tau=3.0)
    cov = coverage_probability(cfg).value
    assert mean_rate(cfg).value == pytest.approx(2.0 * cov)
    assert mean_rate(cfg.replace(tau=0.5)).value == 0.0
    assert mean_rate(cfg, ModulationRule.fixed(8)).value == pytest.approx(3.0 * cov)


FIG9 = load_config({"alpha": 3.5, "h": "0.2 km", "mu": "2 km", "l": "0.5 km", "v": "30 m/s",
                    "lambda": "1000/km2", "w": "0.5 km", "tau": 1})


def test_harvested_data_inverse_in_speed():
    D = harvested_data(FIG9).value
    assert harvested_data(FIG9.replace(v=2 * FIG9.v)).value == pytest.approx(D / 2, rel=1e-12)


def test_harvested_data_nondecreasing_in_spacing():
    vals = [harvested_data(FIG9.replace(mu=mu)).value for mu in (1000.0, 2000.0, 4000.0)]
    assert vals[0] <= vals[1] <= vals[2]


def test_planar_wide_spacing_recovers_line():
    cfg = FIG4.replace(tau=1.0)
    wide = coverage_probability(cfg.replace(mode="2d", nu=100 * cfg.mu))
    assert wide.value == pytest.approx(coverage_probability(cfg).value, abs=1e-6)


def test_planar_rows_add_interference():
    cfg = FIG4.replace(tau=1.0)
    near = coverage_probability(cfg.replace(mode="2d", nu=cfg.l)).value
    assert near < coverage_probability(cfg).value


def test_error_budget_reported_and_small():
    res = coverage_probability(FIG4)
    assert 0 < res.error < 1e-6
    assert res.truncation[0] >= 1
    assert res.info["occupancy"] == pytest.approx(FIG4.occupancy)


def test_truncation_tail_bound_is_sound():
    ev = LaplaceEvaluator(FIG3.replace(alpha=2.5))
    sigma = np.array([1e8])
    prev = math.inf
    for k in (4, 8, 16, 32):
        g, _, tail = ev.log_derivatives(sigma, k=(k, 0))
        g2, _, _ = ev.log_derivatives(sigma, k=(2 * k, 0))
        assert tail[0] < prev
        prev = tail[0]
        # extra windows can only lower the product, by at most the bound
        assert 0 <= g[0] - g2[0] <= tail[0] / (1 - tail[0])


def test_convergence_error_when_budget_cannot_be_met():
    spec = QuadratureSpec(n_outer=4, n_inner=4, rtol=1e-16, n_max=8)
    with pytest.raises(ConvergenceError) as exc:
        coverage_probability(FIG4, quadrature=spec)
    assert exc.value.error_estimate > 0


def test_negative_argument_rejected():
    with pytest.raises(ValueError):
        laplace_shot_noise(FIG3, -1.0)
