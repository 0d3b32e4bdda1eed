import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from uavharvest import (
    ConfigError,
    FadingModel,
    ModulationRule,
    NetworkConfig,
    dump_config,
    load_config,
    loads_config,
    window_center,
)
from uavharvest.model import parse_quantity

BASE = {"lambda": "1000/km2", "mu": "2 km", "w": "0.25 km", "l": "0.5 km", "h": "0.25 km", "m": 1, "omega": 1}


def test_units_converted_to_si():
    cfg = load_config(BASE)
    assert cfg.lam == pytest.approx(1e-3)
    assert (cfg.mu, cfg.w, cfg.l, cfg.h) == (2000.0, 250.0, 500.0, 250.0)
    assert cfg.mean_devices == pytest.approx(125.0)


@pytest.mark.parametrize(
    "field, raw, expected",
    [
        ("tau", "0 dB", 1.0),
        ("tau", "10 dB", 10.0),
        ("p", "23 dBm", 10 ** (-0.7)),
        ("p", "30 dBm", 1.0),
        ("p", "0 dBW", 1.0),
        ("p", "200 mW", 0.2),
        ("v", "36 km/h", 10.0),
        ("noise", "-104 dBm", 10 ** (-13.4)),
    ],
)
def test_unit_table(field, raw, expected):
    cfg = load_config(dict(BASE, **{field: raw}))
    assert getattr(cfg, field) == pytest.approx(expected, rel=1e-12)


def test_noise_density_needs_bandwidth():
    with pytest.raises(ConfigError) as exc:
        load_config(dict(BASE, noise="-174 dBm/Hz"))
    assert exc.value.field == "bandwidth"
    cfg = load_config(dict(BASE, noise="-174 dBm/Hz", bandwidth="10 MHz"))
    assert cfg.noise == pytest.approx(10 ** (-13.4), rel=1e-9)


def test_window_longer_than_spacing_rejected():
    with pytest.raises(ConfigError, match="w"):
        load_config(dict(BASE, w="3 km"))


@pytest.mark.parametrize(
    "change, field",
    [({"alpha": 0.5}, "alpha"), ({"m": 1.5}, "m"), ({"h": "0 m"}, "h"), ({"lambda": -1}, "lambda"),
     ({"tau": 0}, "tau"), ({"mode": "3d"}, "mode"), ({"mode": "2d"}, "nu")],
)
def test_invalid_fields_are_named(change, field):
    with pytest.raises(ConfigError) as exc:
        load_config(dict(BASE, **change))
    assert exc.value.field == field


def test_missing_and_unknown_fields():
    doc = dict(BASE)
    del doc["h"]
    with pytest.raises(ConfigError, match="h"):
        load_config(doc)
    with pytest.raises(ConfigError, match="colour"):
        load_config(dict(BASE, colour="red"))
    with pytest.raises(ConfigError):
        load_config(dict(BASE, mu="2 parsecs"))


def test_planar_mode_needs_steep_path_loss():
    with pytest.raises(ConfigError, match="alpha"):
        load_config(dict(BASE, mode="2d", nu="2 km", alpha=2.0))


def test_toml_text_and_overrides():
    text = 'lambda = "100/km2"\nmu = "1 km"\nw = 250\nl = 500\nh = 200\ntau = "10 dB"\n'
    cfg = loads_config(text, {"alpha": 3})
    assert cfg.tau == pytest.approx(10.0)
    assert cfg.alpha == 3.0
    assert load_config(text) == cfg.replace(alpha=4.0)


cfg_strategy = st.builds(
    lambda lam, mu, frac, l, h, alpha, m, tau: NetworkConfig(
        lam=lam, mu=mu, h=h, w=frac * mu, l=l, alpha=alpha, m=m, tau=tau),
    st.floats(0, 1e-2), st.floats(10, 1e4), st.floats(0, 1), st.floats(1, 1e3), st.floats(1, 1e3),
    st.floats(1.01, 8), st.integers(1, 4), st.floats(1e-3, 1e3),
)


@given(cfg_strategy)
@settings(max_examples=60, deadline=None)
def test_dump_load_round_trip(cfg):
    assert loads_config(dump_config(cfg)) == cfg


@given(st.integers(-50, 50), st.integers(-50, 50), st.floats(0, 100))
def test_windows_disjoint(i, k, t):
    cfg = NetworkConfig(lam=1e-3, mu=2000.0, h=200.0, w=2000.0, l=500.0)
    a, b = window_center(cfg, i, t), window_center(cfg, k, t)
    assert a.overlaps(b) == (i == k)


def test_window_geometry():
    cfg = NetworkConfig(lam=1e-3, mu=2000.0, h=200.0, w=250.0, l=500.0, v=30.0)
    win = window_center(cfg, 2, t=10.0)
    assert win.x_center == pytest.approx(4300.0)
    assert win.area == pytest.approx(250.0 * 500.0)
    assert win.contains(4300.0, 249.0) and not win.contains(4300.0, 251.0)


def test_rayleigh_special_case():
    rng = np.random.default_rng(123)
    g = FadingModel(1, 1.0).sample(rng, 20_000)
    assert g.min() > 0
    assert stats.kstest(g, "expon").pvalue > 0.01


@pytest.mark.parametrize("m, omega", [(1, 1.0), (2, 0.5), (4, 3.0)])
def test_fading_mean(m, omega):
    g = FadingModel(m, omega).sample(np.random.default_rng(m), 1_000_000)
    assert abs(g.mean() - omega) < 0.01 * omega


@given(st.integers(1, 4), st.floats(0.1, 5), st.floats(0, 20))
def test_ccdf_forms_agree(m, omega, x):
    f = FadingModel(m, omega)
    assert abs(f.ccdf(x) - f.ccdf_series(x)) <= 1e-10


def test_fading_laplace_matches_samples():
    f = FadingModel(2, 1.0)
    g = f.sample(np.random.default_rng(5), 200_000)
    assert np.exp(-0.7 * g).mean() == pytest.approx(f.laplace(0.7), abs=3e-3)


@given(st.floats(1.0, 1e6))
def test_floor_modulation(tau):
    rule = ModulationRule()
    assert rule.order(tau) == 2 ** math.floor(math.log2(1 + tau))
    assert rule.order(tau) <= 1 + tau < 2 * rule.order(tau)


def test_modulation_rules():
    assert ModulationRule().bits(0.5) == 0.0
    assert ModulationRule("shannon").bits(3.0) == pytest.approx(2.0)
    assert ModulationRule.fixed(16).bits(0.1) == 4.0
    with pytest.raises(ValueError):
        ModulationRule.fixed(1)


def test_parse_quantity():
    assert parse_quantity("2.5e3 m") == (2500.0, "m")
    assert parse_quantity(7) == (7.0, "")
    with pytest.raises(ConfigError):
        parse_quantity("km")
