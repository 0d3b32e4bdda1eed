"""Activation-window length that maximizes the mean rate of the typical UAV."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .analytic import coverage_probability
from .model import NetworkConfig

__all__ = ["SweepResult", "WindowOptimum", "objective", "optimize_window", "golden_section_max", "sweep"]

_INV_PHI = (math.sqrt(5) - 1) / 2


@dataclass
class SweepResult:
    """Objective values on an ascending parameter grid."""

    parameter: str
    grid: np.ndarray
    values: np.ndarray
    errors: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.errors = np.asarray(self.errors, dtype=float)
        if self.grid.size == 0:
            raise ValueError("empty sweep grid")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("sweep grid must be strictly increasing")

    @property
    def argmax(self):
        return int(np.argmax(self.values))

    @property
    def best(self):
        k = self.argmax
        return float(self.grid[k]), float(self.values[k])

    def local_maxima(self, budget=None):
        """Indices of grid maxima separated by a dip larger than the error budget."""
        v = self.values
        tol = float(self.errors.max()) * 2 if budget is None else budget
        peaks = [k for k in range(v.size)
                 if (k == 0 or v[k] >= v[k - 1] - tol) and (k == v.size - 1 or v[k] >= v[k + 1] - tol)]
        separated = []
        for k in peaks:
            if not separated:
                separated.append(k)
                continue
            prev = separated[-1]
            dip = v[prev:k + 1].min()
            if dip < min(v[prev], v[k]) - tol:
                separated.append(k)
            elif v[k] > v[prev]:
                separated[-1] = k
        return separated

    def is_unimodal(self, budget=None):
        return len(self.local_maxima(budget)) <= 1


@dataclass
class WindowOptimum:
    w_star: float
    value: float
    sweep: SweepResult
    evaluations: int
    flags: set = field(default_factory=set)

    @property
    def w_over_mu(self):
        return self.w_star / self.sweep.grid[-1]


def objective(cfg: NetworkConfig, w, **kw):
    """Coverage with window length ``w`` (the rate up to the constant ``log2 M``).

    Returns the :class:`~uavharvest.analytic.AnalyticResult`; ``w = 0`` gives 0.
    """
    if not 0 <= w <= cfg.mu:
        raise ValueError(f"window length must lie in [0, mu], got {w}")
    return coverage_probability(cfg.replace(w=float(w)), **kw)


def sweep(cfg: NetworkConfig, parameter, grid, metric=coverage_probability, **kw) -> SweepResult:
    """Evaluate ``metric`` over ``grid`` values of one config field."""
    key = "lam" if parameter == "lambda" else parameter
    vals, errs = [], []
    for x in grid:
        r = metric(cfg.replace(**{key: float(x)}), **kw)
        vals.append(float(r.value))
        errs.append(float(r.error))
    return SweepResult(parameter, grid, vals, errs)


def golden_section_max(f, a, b, tol):
    """Maximize a unimodal ``f`` on ``[a, b]`` down to bracket width ``tol``.

    Returns ``(x, f(x), n_evaluations)``.
    """
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    n = 2
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
        n += 1
    return (c, fc, n) if fc >= fd else (d, fd, n)


def optimize_window(cfg: NetworkConfig, tolerance=1.0, n_grid=32, **kw) -> WindowOptimum:
    """Find ``w*`` in ``(0, mu]`` maximizing :func:`objective`.

    A grid scan of ``n_grid`` points brackets the maximum, golden-section
    search refines it to ``tolerance`` meters.  Flags: ``"zero-objective"``
    (objective vanishes everywhere), ``"ambiguous"`` (several grid points
    tie within the error budget; the smallest is used) and
    ``"non-unimodal"`` (separated local maxima; the grid argmax is
    returned unrefined).
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    grid = cfg.mu * np.arange(1, n_grid + 1) / n_grid
    sw = sweep(cfg, "w", grid, **kw)
    flags = set()
    budget = 2 * float(sw.errors.max())
    k = sw.argmax
    vmax = float(sw.values[k])

    if vmax <= budget:
        flags.add("zero-objective")
        return WindowOptimum(float(grid[0]), float(sw.values[0]), sw, n_grid, flags)
    ties = np.flatnonzero(sw.values >= vmax - budget)
    if ties.size > 1:
        flags.add("ambiguous")
        k = int(ties[0])
    if not sw.is_unimodal(budget):
        flags.add("non-unimodal")
        warnings.warn("window objective has several separated maxima; returning grid argmax",
                      RuntimeWarning, stacklevel=2)
        return WindowOptimum(float(grid[k]), float(sw.values[k]), sw, n_grid, flags)

    lo = grid[k - 1] if k > 0 else 0.0
    hi = grid[k + 1] if k + 1 < grid.size else grid[-1]
    x, fx, n = golden_section_max(lambda w: float(objective(cfg, w, **kw).value), lo, hi, tolerance)
    if fx < sw.values[k]:
        x, fx = float(grid[k]), float(sw.values[k])
    return WindowOptimum(float(x), float(fx), sw, n_grid + n, flags)
