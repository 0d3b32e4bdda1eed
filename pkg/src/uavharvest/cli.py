"""Experiment runner.

``uavharvest run EXPERIMENT`` evaluates one metric family over parameter
sweeps and writes one CSV per metric plus a JSON manifest;
``verify-all`` runs the analytic-vs-simulation suite over a directory of
config files; ``optimize`` and ``transport`` are shortcuts for the
corresponding experiments.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .analytic import (
    LaplaceEvaluator,
    coverage_probability,
    harvested_data,
    laplace_noise,
    mean_rate,
)
from .model import ConfigError, ModulationRule, NetworkConfig, load_config
from .optimize import optimize_window
from .quadrature import ConvergenceError
from .sim import (
    Scenario,
    coverage_estimate,
    empirical_laplace,
    harvest_passage_estimate,
)
from .transport import check_identity_analytic, check_identity_simulated

__all__ = ["ExperimentSpec", "main", "parse_grid", "run", "verify_all", "PRESETS"]

OUT_ENV = "UAVHARVEST_OUT"
VERIFY_SE = 5.0
STAT_COLUMNS = ("analytic", "analytic_error", "mc_mean", "mc_se", "trials", "seed")


class SpecError(ValueError):
    """Invalid experiment definition."""


# --------------------------------------------------------------------------
# grids

def parse_grid(text: str) -> tuple[float, ...]:
    """``"1,2,5"``, ``"lin:a:b:n"`` or ``"log:a:b:n"`` -> strictly increasing tuple."""
    text = text.strip()
    if not text:
        raise SpecError("empty sweep grid")
    try:
        if text.startswith(("lin:", "log:")):
            kind, a, b, n = text.split(":")
            a, b, n = float(a), float(b), int(n)
            if n < 1:
                raise SpecError(f"grid needs at least one point: {text!r}")
            if kind == "lin":
                vals = np.linspace(a, b, n)
            else:
                if a <= 0 or b <= 0:
                    raise SpecError(f"log grid bounds must be positive: {text!r}")
                vals = np.geomspace(a, b, n)
        else:
            vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"cannot parse grid {text!r}") from None
    vals = tuple(float(v) for v in vals)
    if not vals:
        raise SpecError("empty sweep grid")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise SpecError(f"sweep grid must be strictly increasing: {text!r}")
    return vals


def _parse_sweep(text):
    if "=" not in text:
        raise SpecError(f"sweep must look like VAR=GRID, got {text!r}")
    var, grid = text.split("=", 1)
    return var.strip(), parse_grid(grid)


_FIELDS = {"lambda": "lam", "lam": "lam", "mu": "mu", "h": "h", "w": "w", "l": "l", "alpha": "alpha",
           "m": "m", "omega": "omega", "p": "p", "tau": "tau", "noise": "noise", "v": "v", "nu": "nu"}


def _with(cfg: NetworkConfig, var, x) -> NetworkConfig:
    """Config with sweep variable ``var`` set to ``x`` (SI units)."""
    if var == "w_over_mu":
        return cfg.replace(w=x * cfg.mu)
    if var not in _FIELDS:
        raise SpecError(f"unknown sweep variable {var!r}")
    key = _FIELDS[var]
    return cfg.replace(**{key: int(x) if key == "m" else float(x)})


# --------------------------------------------------------------------------
# experiment spec and rows

@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    config: NetworkConfig
    sweeps: tuple = ()
    out: Path = Path(".")
    seed: int = 0
    trials: int | None = None
    modulation: ModulationRule = field(default_factory=ModulationRule)
    verify: bool = False
    name: str | None = None

    def __post_init__(self):
        base = self.experiment.split(":")[0]
        if base not in EXPERIMENTS:
            raise SpecError(f"unknown experiment {self.experiment!r}")
        for var, grid in self.sweeps:
            if not grid:
                raise SpecError(f"empty sweep grid for {var!r}")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise SpecError(f"sweep grid for {var!r} must be strictly increasing")
        if self.trials is not None and self.trials < 0:
            raise SpecError("trials must be >= 0")


@dataclass
class Stat:
    analytic: float = math.nan
    analytic_error: float = math.nan
    mc_mean: float = math.nan
    mc_se: float = math.nan
    trials: int = 0
    slack: float = 0.0

    def disagrees(self, n_se=VERIFY_SE):
        if not self.trials or math.isnan(self.analytic) or math.isnan(self.mc_mean):
            return False
        se = max(self.mc_se, 1.0 / self.trials)
        tol = n_se * se + (0.0 if math.isnan(self.analytic_error) else self.analytic_error) + self.slack
        return abs(self.analytic - self.mc_mean) > tol


@dataclass
class Context:
    seed: int
    trials: int
    modulation: ModulationRule
    explicit_trials: bool


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _est(analytic, mc=None, scale=1.0, slack=0.0):
    st = Stat(float(analytic.value), float(analytic.error))
    if mc is not None:
        st.mc_mean, st.mc_se, st.trials = scale * mc.mean, scale * mc.std_error, mc.trials
    st.slack = slack
    return st


def _mc_bias(sc: Scenario, cfg: NetworkConfig):
    """Bound on the coverage shift caused by simulating finitely many windows."""
    if cfg.lam == 0:
        return 0.0
    half = [cfg.h ** 2, (cfg.w / 2) ** 2, (cfg.l / 2) ** 2]
    sigma = cfg.tau * sum(half) ** (cfg.alpha / 2) * cfg.m / cfg.omega
    return min(1.0, sc.truncation_bias(sigma))


# --------------------------------------------------------------------------
# experiment handlers: (ctx, cfg, var, grid) -> list of (metric, params, Stat)

def _min_trials(ctx):
    return min(1000, max(ctx.trials, 1))


def _exp_laplace(ctx, cfg, var, grid, exclude_center=False):
    if var != "s":
        raise SpecError("the laplace experiments sweep over 's'")
    ev = LaplaceEvaluator(cfg, exclude_center=exclude_center)
    metric = "laplace_interference" if exclude_center else "laplace_shot_noise"
    mcs = [None] * len(grid)
    if ctx.trials:
        mcs = empirical_laplace(Scenario(cfg, ctx.seed), grid, ctx.trials, exclude_center, _min_trials(ctx))
    return [(metric, {"s": s}, _est(ev.evaluate(s), mc)) for s, mc in zip(grid, mcs)]


def _exp_noise_laplace(ctx, cfg, var, grid):
    rows = _exp_laplace(ctx, cfg, var, grid, exclude_center=True)
    for s in grid:
        rows.append(("laplace_noise", {"s": s}, Stat(float(laplace_noise(s, cfg.noise)), 0.0)))
    return rows


def _coverage_rows(ctx, cfg, var, grid, metric, bits_of=None, noise=None):
    """Coverage-type rows; threshold sweeps share one set of samples."""
    rows = []
    if noise is not None:
        cfg = cfg.replace(noise=noise)
    cfgs = [_with(cfg, var, x) for x in grid]
    mcs = [None] * len(grid)
    if ctx.trials:
        if var == "tau":
            mcs = coverage_estimate(Scenario(cfg, ctx.seed), ctx.trials, tau=list(grid),
                                    min_trials=_min_trials(ctx))
        else:
            mcs = [coverage_estimate(Scenario(c, ctx.seed), ctx.trials, min_trials=_min_trials(ctx))
                   for c in cfgs]
    for x, c, mc in zip(grid, cfgs, mcs):
        bits = 1.0 if bits_of is None else bits_of(c.tau)
        res = coverage_probability(c)
        st = _est(res, mc, bits, bits * _mc_bias(Scenario(c), c))
        st.analytic, st.analytic_error = bits * res.value, bits * res.error
        rows.append((metric, {var: x}, st))
    return rows


def _exp_coverage(ctx, cfg, var, grid):
    return _coverage_rows(ctx, cfg, var, grid, "coverage")


def _exp_rate(ctx, cfg, var, grid):
    return _coverage_rows(ctx, cfg, var, grid, "mean_rate", ctx.modulation.bits)


def _exp_sinr(ctx, cfg, var, grid):
    return (_coverage_rows(ctx, cfg, var, grid, "coverage_sinr")
            + _coverage_rows(ctx, cfg, var, grid, "coverage_sir", noise=0.0))


def _exp_2d(ctx, cfg, var, grid):
    if not cfg.is_2d:
        if cfg.nu is None:
            raise SpecError("the 2d experiment needs 'nu' in the config")
        cfg = cfg.replace(mode="2d")
    return _coverage_rows(ctx, cfg, var, grid, "coverage_2d")


def _exp_harvest(ctx, cfg, var, grid):
    rows = []
    for x in grid:
        c = _with(cfg, var, x)
        res = harvested_data(c, ctx.modulation)
        mc = None
        if ctx.trials and c.w > 0:
            mc = harvest_passage_estimate(Scenario(c, ctx.seed), trials=ctx.trials, modulation=ctx.modulation)
        rows.append(("harvested_data", {var: x}, _est(res, mc)))
    return rows


def _exp_transport(ctx, cfg, var, grid):
    rows = []
    for x in grid:
        c = _with(cfg, var, x)
        rep = check_identity_analytic(c, ctx.modulation)
        st = Stat(rep.ratio, rep.ratio_error)
        if ctx.trials >= 10_000:
            sim = check_identity_simulated(Scenario(c, ctx.seed), ctx.modulation, ctx.trials)
            st.mc_mean, st.mc_se, st.trials = sim.ratio, sim.ratio_error, ctx.trials
        rows.append(("transport_ratio", {var: x}, st))
        rows.append(("transport_terms", {var: x, "K": rep.K, "T": rep.T, "R": rep.R,
                                         "occupancy": rep.occupancy}, Stat(rep.D, rep.ratio_error * rep.D)))
    return rows


def _exp_optimize(ctx, cfg, var, grid):
    opt = optimize_window(cfg)
    rows = []
    for w, val, err in zip(opt.sweep.grid, opt.sweep.values, opt.sweep.errors):
        st = Stat(float(val), float(err))
        if ctx.explicit_trials and ctx.trials:
            c = cfg.replace(w=float(w))
            mc = coverage_estimate(Scenario(c, ctx.seed), ctx.trials, min_trials=_min_trials(ctx))
            st.mc_mean, st.mc_se, st.trials = mc.mean, mc.std_error, mc.trials
            st.slack = _mc_bias(Scenario(c), c)
        rows.append(("window_objective", {"w_over_mu": float(w) / cfg.mu}, st))
    params = {"w_star": opt.w_star, "w_over_mu": opt.w_over_mu, "evaluations": opt.evaluations,
              "flags": "|".join(sorted(opt.flags))}
    rows.append(("window_optimum", params, Stat(opt.value, float(opt.sweep.errors.max()))))
    return rows


# name -> (handler, default inner sweep, default trials)
EXPERIMENTS: dict[str, tuple[Callable, tuple | None, int]] = {
    "laplace": (_exp_laplace, ("s", "auto"), 10_000),
    "noise-laplace": (_exp_noise_laplace, ("s", "auto"), 10_000),
    "coverage": (_exp_coverage, ("tau", "log:0.1:100:10"), 10_000),
    "rate": (_exp_rate, ("tau", "log:0.1:100:10"), 10_000),
    "sinr": (_exp_sinr, ("tau", "log:0.1:10:10"), 10_000),
    "2d": (_exp_2d, ("tau", "log:0.1:100:10"), 10_000),
    "harvest": (_exp_harvest, ("w_over_mu", "lin:0.125:1:8"), 2_000),
    "transport": (_exp_transport, None, 0),
    "optimize": (_exp_optimize, None, 0),
    "figure": (None, None, 0),
}


# --------------------------------------------------------------------------
# figure presets (parameters fixed in code; grids can be overridden with --sweep)

@dataclass(frozen=True)
class Preset:
    experiment: str
    config: dict
    sweeps: tuple
    modulation: ModulationRule = ModulationRule()
    note: str = ""


_GEOM_4 = {"alpha": 4, "h": "0.2 km", "l": "0.5 km", "m": 1, "omega": 1}
_TABLE = {"p": "23 dBm", "alpha": 2, "w": "100 m", "l": "100 m", "mu": "200 m",
          "noise": "-104 dBm", "lambda": "1e5/km2", "h": "100 m"}

PRESETS: dict[str, Preset] = {
    "3": Preset("laplace",
                {"lambda": "1000/km2", "mu": "2 km", "w": "0.25 km", "l": "0.5 km", "h": "0.25 km",
                 "m": 1, "omega": 1, "alpha": 2.5, "d_ref": "1 km"},
                (("alpha", "2.5,3,3.5"), ("s", "log:1e-4:1:20")),
                note="shot-noise Laplace transform for three path-loss exponents, distances in km"),
    "4": Preset("coverage", dict(_GEOM_4, **{"lambda": "100/km2", "mu": "1 km", "w": "0.25 km", "tau": 10}),
                (("w", "lin:125:1000:8"),),
                note="coverage against window length; tau is not fixed by the source, 10 is used"),
    "5": Preset("rate", dict(_GEOM_4, **{"lambda": "100/km2", "mu": "1 km", "w": "0.25 km"}),
                (("lambda", "5e-5,1e-4,2e-4,5e-4,1e-3"), ("tau", "log:0.1:100:30"))),
    "6": Preset("rate", dict(_GEOM_4, **{"lambda": "100/km2", "mu": "1 km", "w": "0.25 km"}),
                (("w_over_mu", "0.125,0.25,0.5,1"), ("tau", "log:0.1:100:30"))),
    "7": Preset("rate", dict(_GEOM_4, **{"lambda": "100/km2", "mu": "1 km", "w": "0.25 km"}),
                (("tau", "log:0.01:1000:30"),), ModulationRule("shannon")),
    "8": Preset("optimize", dict(_GEOM_4, **{"lambda": "10/km2", "mu": "2 km", "w": "1 km", "tau": 1}),
                (("lambda", "1e-5,2e-5,3e-5"),)),
    "9": Preset("harvest",
                {"alpha": 3.5, "h": "0.2 km", "mu": "2 km", "l": "0.5 km", "v": "30 m/s", "m": 1, "omega": 1,
                 "lambda": "1000/km2", "w": "0.5 km", "tau": 1},
                (("tau", "1,3,7"), ("w_over_mu", "lin:0.125:1:8"))),
    "10": Preset("sinr", dict(_TABLE), (("tau", "log:0.1:10:10"),)),
    "11": Preset("noise-laplace", dict(_TABLE), (("s", "log:1e2:1e14:25"),)),
}


def resolve(experiment: str, config: NetworkConfig | None, params: dict, sweeps: list,
            **kw) -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from CLI-level pieces (presets expanded)."""
    modulation = kw.pop("modulation", None)
    mode = kw.pop("mode", None)
    name = experiment.replace(":", "")
    if experiment.startswith("figure:"):
        key = experiment.split(":", 1)[1]
        if key not in PRESETS:
            raise SpecError(f"no preset for {experiment!r}; available: {', '.join(PRESETS)}")
        pre = PRESETS[key]
        cfg = load_config(pre.config, params)
        given = {v for v, _ in sweeps}
        sweeps = [(v, parse_grid(g)) for v, g in pre.sweeps if v not in given] + list(sweeps)
        experiment = pre.experiment
        modulation = modulation or pre.modulation
    else:
        if config is None:
            raise SpecError(f"experiment {experiment!r} needs --config")
        cfg = config
    if mode:
        cfg = cfg.replace(mode=mode)
    return ExperimentSpec(experiment, cfg, tuple(sweeps), modulation=modulation or ModulationRule(),
                          name=name, **kw)


# --------------------------------------------------------------------------
# running

def _write_csv(path: Path, rows, seed):
    cols = []
    for _, params, _ in rows:
        cols.extend(k for k in params if k not in cols)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols + list(STAT_COLUMNS))
        for _, params, st in rows:
            writer.writerow([_fmt(params.get(c)) for c in cols]
                            + [_fmt(st.analytic), _fmt(st.analytic_error), _fmt(st.mc_mean),
                               _fmt(st.mc_se), _fmt(st.trials), _fmt(seed)])


def _auto_s_grid(cfg, n=20):
    """Laplace arguments spanning the drop of the transform, scaled to the geometry."""
    scale = cfg.h ** cfg.alpha / cfg.unit_power
    return tuple(float(x) for x in np.geomspace(1e-3, 1e2, n) * scale)


def _split_sweeps(spec: ExperimentSpec):
    """Outer sweeps (config fields, looped) and the inner ``(var, grid)``."""
    _, default_inner, _ = EXPERIMENTS[spec.experiment]
    sweeps = list(spec.sweeps)
    if spec.experiment == "optimize":
        return sweeps, ("w", ())
    if default_inner is None:
        if sweeps:
            return sweeps[:-1], sweeps[-1]
        return [], ("lambda", (spec.config.lam,))
    inner_var = default_inner[0]
    if spec.experiment in ("laplace", "noise-laplace"):
        outer = [sw for sw in sweeps if sw[0] != "s"]
        inner = [sw for sw in sweeps if sw[0] == "s"]
        return outer, (inner[-1] if inner else (inner_var, _auto_s_grid(spec.config)))
    if sweeps:
        return sweeps[:-1], sweeps[-1]
    return [], (inner_var, parse_grid(default_inner[1]))


def run(spec: ExperimentSpec) -> dict:
    """Execute ``spec`` and write its CSV files and manifest.

    Returns a dict with the written ``files``, the rows per metric and the
    list of ``violations`` (rows where analytic and simulated values differ
    by more than five standard errors plus the analytic error budget).
    """
    t0 = time.perf_counter()
    handler, _, default_trials = EXPERIMENTS[spec.experiment]
    if handler is None:
        raise SpecError("use figure:<n> to run a preset")
    ctx = Context(spec.seed, default_trials if spec.trials is None else spec.trials,
                  spec.modulation, spec.trials is not None)
    outer, (var, grid) = _split_sweeps(spec)

    tables: dict[str, list] = {}
    outer_vars = [v for v, _ in outer]
    for combo in itertools.product(*[g for _, g in outer]):
        cfg = spec.config
        for v, x in zip(outer_vars, combo):
            cfg = _with(cfg, v, x)
        for metric, params, st in handler(ctx, cfg, var, grid):
            tables.setdefault(metric, []).append((metric, dict(zip(outer_vars, combo)) | params, st))

    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    name = spec.name or spec.experiment
    files, violations = [], []
    for metric, rows in tables.items():
        path = out / f"{name}_{metric}.csv"
        _write_csv(path, rows, spec.seed)
        files.append(str(path))
        for _, params, st in rows:
            if st.disagrees():
                violations.append(f"{metric} at {params}: analytic {st.analytic:.6g} vs "
                                  f"MC {st.mc_mean:.6g} +- {st.mc_se:.3g}")
    manifest = {
        "experiment": spec.experiment,
        "name": name,
        "version": __version__,
        "config": spec.config.to_dict(),
        "sweeps": [[v, list(g)] for v, g in spec.sweeps],
        "seed": spec.seed,
        "trials": ctx.trials,
        "modulation": {"kind": spec.modulation.kind, "M": spec.modulation.M},
        "files": files,
        "wall_time_s": time.perf_counter() - t0,
    }
    with open(out / f"{name}_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return {"files": files, "violations": violations, "rows": tables, "manifest": manifest}


# --------------------------------------------------------------------------
# verify-all

def default_config_dir() -> Path:
    return Path(str(resources.files("uavharvest") / "configs"))


def _check_config(cfg: NetworkConfig, seed, trials):
    """Yield ``(check, passed, analytic, mc_mean, mc_se, detail)`` tuples."""
    sc = Scenario(cfg, seed)
    min_trials = min(1000, trials)
    n_se = 3.0

    def agrees(est, value, slack):
        # a sample with no spread (tiny runs) still carries O(1/n) uncertainty
        return abs(est.mean - value) <= n_se * max(est.std_error, 1.0 / est.trials) + slack

    worst = 0.0
    for excl in (True, False):
        ev = LaplaceEvaluator(cfg, exclude_center=excl)
        for noise in (0.0, cfg.noise):
            worst = max(worst, abs(ev.evaluate(0.0, noise).value - 1.0))
    yield "normalization", worst <= 1e-12, 1.0 - worst, math.nan, math.nan, ""

    cov = coverage_probability(cfg)
    yield ("coverage_bound", cov.value <= cfg.occupancy + 1e-10, cov.value, math.nan, math.nan,
           f"occupancy={cfg.occupancy!r}")
    if trials:
        mc = coverage_estimate(sc, trials, min_trials=min_trials)
        ok = agrees(mc, cov.value, cov.error + _mc_bias(sc, cfg))
        yield "coverage_mc", ok, cov.value, mc.mean, mc.std_error, ""

        ev = LaplaceEvaluator(cfg, exclude_center=False)
        scale = cfg.h ** cfg.alpha / cfg.unit_power
        s_grid = [0.3 * scale, 3 * scale]
        for s, est in zip(s_grid, empirical_laplace(sc, s_grid, trials, min_trials=min_trials)):
            a = ev.evaluate(s)
            yield (f"laplace_mc[s={s:.4g}]", agrees(est, a.value, a.error + _mc_bias(sc, cfg)),
                   a.value, est.mean, est.std_error, "")

    if not cfg.is_2d and cfg.lam > 0 and cfg.w > 0:
        D = harvested_data(cfg)
        if trials:
            est = harvest_passage_estimate(sc, trials=max(100, trials // 10))
            slack = D.error + D.value * _mc_bias(sc, cfg) / max(cov.value, 1e-300)
            yield "harvest_mc", agrees(est, D.value, slack), D.value, est.mean, est.std_error, ""
        R = mean_rate(cfg)
        if R.value > 0:
            ratio = D.value * cfg.mean_devices / (R.value * cfg.w / cfg.v)
            budget = D.error / D.value + R.error / R.value
            yield ("transport_identity", abs(ratio - 1) <= budget + 1e-12, ratio, math.nan, math.nan,
                   f"budget={budget!r}")


def verify_all(config_dir=None, seed=0, trials=10_000, out=None):
    """Run the agreement and invariant checks on every ``*.toml`` in ``config_dir``.

    Returns ``(rows, all_passed)``; with ``out`` set, also writes
    ``verify_all.csv`` there.  Invalid configs are reported as failed
    ``config`` checks.
    """
    config_dir = Path(config_dir) if config_dir else default_config_dir()
    paths = sorted(config_dir.glob("*.toml"))
    if not paths:
        raise SpecError(f"no *.toml configs in {config_dir}")
    rows = []
    for path in paths:
        try:
            cfg = load_config(path)
        except (ConfigError, ValueError, OSError) as exc:
            rows.append((path.stem, "config", False, math.nan, math.nan, math.nan, str(exc)))
            continue
        rows.append((path.stem, "config", True, math.nan, math.nan, math.nan, ""))
        try:
            for check in _check_config(cfg, seed, trials):
                rows.append((path.stem, *check))
        except (ConvergenceError, ValueError) as exc:
            rows.append((path.stem, "evaluation", False, math.nan, math.nan, math.nan, str(exc)))
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "verify_all.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["config", "check", "status", "analytic", "mc_mean", "mc_se", "detail"])
            for name, check, ok, a, m, se, detail in rows:
                writer.writerow([name, check, "pass" if ok else "fail", _fmt(a), _fmt(m), _fmt(se), detail])
    return rows, all(r[2] for r in rows)


# --------------------------------------------------------------------------
# argument parsing

def _parse_param(text):
    if "=" not in text:
        raise SpecError(f"--param expects key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def _parse_modulation(text):
    if text is None:
        return None
    if text in ("floor", "shannon"):
        return ModulationRule(text)
    if text.startswith("fixed:"):
        return ModulationRule.fixed(int(text.split(":", 1)[1]))
    raise SpecError(f"unknown modulation {text!r} (floor, shannon or fixed:M)")


def _default_out(args):
    return Path(args.out or os.environ.get(OUT_ENV) or "uavharvest-out")


def _add_common(p, config=True):
    if config:
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field (repeatable)")
        p.add_argument("--mode", choices=("1d", "2d"))
        p.add_argument("--modulation", help="floor (default), shannon or fixed:M")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, help="Monte Carlo trials (0 disables simulation)")
    p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./uavharvest-out)")


def build_parser():
    parser = argparse.ArgumentParser(prog="uavharvest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment or figure preset")
    p.add_argument("experiment", help=f"one of {', '.join(k for k in EXPERIMENTS if k != 'figure')} "
                                      f"or figure:<{'|'.join(PRESETS)}>")
    _add_common(p)
    p.add_argument("--sweep", action="append", default=[], metavar="VAR=GRID",
                   help="sweep a variable over 'a,b,c', 'lin:a:b:n' or 'log:a:b:n'; the last one is innermost")
    p.add_argument("--verify", action="store_true", help="fail when analytic and MC differ by > 5 SE")

    p = sub.add_parser("verify-all", help="analytic vs simulation suite over a config directory")
    p.add_argument("config_dir", nargs="?")
    _add_common(p, config=False)

    for name in ("optimize", "transport"):
        p = sub.add_parser(name, help=f"shortcut for 'run {name}'")
        _add_common(p)
        p.add_argument("--sweep", action="append", default=[], metavar="VAR=GRID")
    return parser


def _load(args):
    params = dict(_parse_param(t) for t in args.param)
    if args.config:
        return load_config(args.config, params), params
    if params and not args.experiment.startswith("figure:"):
        return load_config(params), params
    return None, params


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify-all":
            trials = 10_000 if args.trials is None else args.trials
            rows, ok = verify_all(args.config_dir, args.seed, trials, _default_out(args))
            for name, check, passed, a, m, se, detail in rows:
                status = "PASS" if passed else "FAIL"
                print(f"{status} {name}/{check}" + (f": {detail}" if detail and not passed else ""))
            print(f"{sum(r[2] for r in rows)}/{len(rows)} checks passed")
            return 0 if ok else 1

        if args.command in ("optimize", "transport"):
            args.experiment = args.command
            args.verify = False
        cfg, params = _load(args)
        sweeps = [_parse_sweep(t) for t in args.sweep]
        spec = resolve(args.experiment, cfg, params, sweeps, out=_default_out(args), seed=args.seed,
                       trials=args.trials, verify=args.verify,
                       modulation=_parse_modulation(args.modulation), mode=args.mode)
        result = run(spec)
    except (SpecError, ConfigError, ConvergenceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in result["files"]:
        print(path)
    if args.command == "optimize":
        for _, p, st in result["rows"].get("window_optimum", []):
            print(f"w* = {p['w_star']:.6g} m (w*/mu = {p['w_over_mu']:.4f}), objective {st.analytic:.6g}"
                  + (f" [{p['flags']}]" if p["flags"] else ""))
    if args.command == "transport":
        for _, p, st in result["rows"].get("transport_ratio", []):
            print(f"D*K/(R*T) = {st.analytic:.12g} (budget {st.analytic_error:.3g})")
    if spec.verify and result["violations"]:
        for v in result["violations"]:
            print(f"verify failed: {v}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
