"""Numerical evaluation of the closed-form network metrics.

Everything reduces to products of per-window factors

    f_k(s) = exp(-lambda*w*l) + (1 - exp(-lambda*w*l)) * mean_{(x,y) in W_k} (1 + s*p*omega/(m*d**alpha))**-m,

with ``d**2 = x**2 + y**2 + h**2``.  Internally the Laplace argument is
carried in the scaled form ``sigma = s*p*omega/m``: the coverage integrand
then evaluates at ``sigma = tau * d0**alpha``, which makes SIR results
independent of ``p`` by construction.

The derivative sum ``sum_k (-s)**k/k! * L^(k)(s)`` needed for Nakagami
``m > 1`` is computed from exact s-derivatives of every window integral
(differentiated under the integral sign), turned into derivatives of
``log L`` per window and recombined with complete Bell polynomials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import special

from .model import ModulationRule, NetworkConfig
from .quadrature import ConvergenceError, QuadratureSpec, gauss_legendre, half_rule

__all__ = [
    "AnalyticResult",
    "ProductTruncation",
    "LaplaceEvaluator",
    "factor_window",
    "laplace_shot_noise",
    "laplace_interference",
    "laplace_interference_plus_noise",
    "laplace_noise",
    "laplace_derivative_sum",
    "coverage_probability",
    "conditional_coverage",
    "coverage_probability_2d",
    "mean_rate",
    "mean_rate_2d",
    "conditional_rate",
    "harvested_data",
    "truncation_index",
    "MAX_M",
]

MAX_M = 4

# work-array budget (elements) for the (sigma x node) blocks
_BLOCK = 1 << 21


@dataclass(frozen=True)
class ProductTruncation:
    """Where to cut the infinite product over windows.

    Windows are included until the upper bound ``(1-e^{-lambda w l}) m sigma d_min^-alpha``
    on ``1 - factor`` drops below ``epsilon``; the neglected tail is bounded by
    comparison with an integral and reported with every result.
    """

    epsilon: float = 1e-10
    k_max_cap: int = 100_000


@dataclass(frozen=True)
class AnalyticResult:
    """A value with its error budget.

    ``quad_error`` is the change against a rule with half the nodes,
    ``tail_bound`` bounds the effect of the truncated window product.
    """

    value: float | np.ndarray
    quad_error: float | np.ndarray = 0.0
    tail_bound: float | np.ndarray = 0.0
    truncation: tuple = (0, 0)
    info: dict = field(default_factory=dict, compare=False)

    @property
    def error(self):
        return self.quad_error + self.tail_bound

    def __float__(self):
        return float(self.value)


# --------------------------------------------------------------------------
# truncation

def _occupancy(cfg):
    return -math.expm1(-cfg.mean_devices)


def truncation_index(cfg: NetworkConfig, sigma_max: float, trunc: ProductTruncation):
    """Per-axis truncation ``(K_x, K_y)``; ``K_y`` is 0 in the 1-D model."""
    q1 = _occupancy(cfg)
    if q1 == 0.0 or sigma_max <= 0.0:
        return 1, (1 if cfg.is_2d else 0)
    r = (q1 * cfg.m * sigma_max / trunc.epsilon) ** (1.0 / cfg.alpha)
    rho = math.sqrt(max(r * r - cfg.h * cfg.h, 0.0))
    kx = min(max(1, math.ceil((rho + cfg.w / 2) / cfg.mu)), trunc.k_max_cap)
    if not cfg.is_2d:
        return kx, 0
    ky = min(max(1, math.ceil((rho + cfg.l / 2) / cfg.nu)), trunc.k_max_cap)
    return kx, ky


def _tail_coefficient(cfg: NetworkConfig, k):
    """``C`` such that sum over neglected windows of ``1 - f`` is <= ``C * sigma``."""
    q1 = _occupancy(cfg)
    a = cfg.alpha
    kx, ky = k

    def s1(delta, kk):
        return delta ** -a * (kk - 0.5) ** (1 - a) / (a - 1)

    if not cfg.is_2d:
        return 2.0 * q1 * cfg.m * s1(cfg.mu, kx)

    def s2(delta, kk):
        return delta ** (1 - a) * (kk - 0.5) ** (2 - a) / (a - 2)

    b = math.sqrt(math.pi) * special.gamma((a - 1) / 2) / (2 * special.gamma(a / 2))
    mu, nu = cfg.mu, cfg.nu
    total = 2 * (3 * s1(mu, kx) + 2 * b / nu * s2(mu, kx))
    total += 2 * (3 * s1(nu, ky) + 2 * b / mu * s2(nu, ky))
    return q1 * cfg.m * total


# --------------------------------------------------------------------------
# window node sets

def _nodes_for(rho, n_inner):
    """Per-axis node count for a window whose half-diagonal/distance ratio is rho."""
    return np.select([rho > 0.2, rho > 0.02, rho > 0.003], [n_inner, 8, 2], 1)


@dataclass
class _NodeGroup:
    c: np.ndarray        # d**-alpha at every node
    wt: np.ndarray       # weights, normalized per window
    starts: np.ndarray   # first node of each window
    mult: np.ndarray     # window multiplicity (mirror symmetry)


def _window_groups(cfg: NetworkConfig, k, exclude_center, n_inner):
    """Node groups covering windows i in [0, Kx] (and j in [0, Ky]) with mirror weights."""
    kx, ky = k
    hw, hl = cfg.w / 2, cfg.l / 2
    ii = np.arange(kx + 1)
    jj = np.arange(ky + 1) if cfg.is_2d else np.zeros(1, dtype=int)
    I, J = np.meshgrid(ii, jj, indexing="ij")
    I, J = I.ravel(), J.ravel()
    mult = np.where(I > 0, 2, 1) * np.where(J > 0, 2, 1)
    if exclude_center:
        keep = (I != 0) | (J != 0)
        I, J, mult = I[keep], J[keep], mult[keep]
    cx = I * cfg.mu
    cy = J * (cfg.nu if cfg.is_2d else 0.0)
    dist = np.sqrt(cx * cx + cy * cy + cfg.h * cfg.h)
    n_axis = _nodes_for(math.hypot(hw, hl) / dist, n_inner)
    area = cfg.w * cfg.l

    groups = []
    for n in np.unique(n_axis):
        sel = n_axis == n
        gx, gy, gm = cx[sel], cy[sel], mult[sel]
        ux, wx = gauss_legendre(int(n), -hw, hw)
        if n % 2 == 0 and not np.any(gy):
            # windows centered on y=0 are symmetric in y
            uy, wy = half_rule(int(n), hl)
            wy = 2 * wy
        else:
            uy, wy = gauss_legendre(int(n), -hl, hl)
        UX, UY = np.meshgrid(ux, uy, indexing="ij")
        W = (np.outer(wx, wy) / area).ravel()
        X = gx[:, None] + UX.ravel()[None, :]
        Y = gy[:, None] + UY.ravel()[None, :]
        c = (X * X + Y * Y + cfg.h * cfg.h) ** (-cfg.alpha / 2)
        npw = W.size
        groups.append(_NodeGroup(
            c=c.ravel(),
            wt=np.tile(W, gx.size),
            starts=np.arange(gx.size) * npw,
            mult=gm.astype(float),
        ))
    return groups


def _rising(m, k):
    return math.prod(m + t for t in range(k))


def _log_factor_derivs(sigma, group: _NodeGroup, cfg, order, out):
    """Accumulate sum_k mult_k * d^n/dsigma^n log f_k into ``out[n]``."""
    q0 = math.exp(-cfg.mean_devices)
    q1 = -math.expm1(-cfg.mean_devices)
    m = cfg.m
    n_win = group.starts.size
    npw = group.c.size // n_win if n_win else 0
    if npw == 0:
        return
    per_block = max(1, _BLOCK // max(1, sigma.size * npw))
    for w0 in range(0, n_win, per_block):
        w1 = min(n_win, w0 + per_block)
        c = group.c[w0 * npw:w1 * npw]
        wt = group.wt[w0 * npw:w1 * npw]
        starts = group.starts[w0:w1] - group.starts[w0]
        A = sigma[:, None] * c[None, :]
        lg = np.log1p(A)
        one_minus_mean = np.add.reduceat(-np.expm1(-m * lg) * wt, starts, axis=1)
        om_f = q1 * one_minus_mean
        f = q0 + q1 * (1.0 - one_minus_mean)
        fd = [f]
        for n in range(1, order + 1):
            e_n = np.add.reduceat(wt * c ** n * np.exp(-(m + n) * lg), starts, axis=1)
            fd.append(q1 * (-1) ** n * _rising(m, n) * e_n)
        mult = group.mult[w0:w1]
        hd = [np.log1p(-om_f)]
        for n in range(1, order + 1):
            acc = fd[n].copy()
            for k in range(0, n - 1):
                acc -= math.comb(n - 1, k) * hd[k + 1] * fd[n - 1 - k]
            hd.append(acc / f)
        for n in range(order + 1):
            out[n] += hd[n] @ mult


def _bell_ratios(g, order):
    """``L^(n)/L`` for n = 0..order given derivatives ``g[n]`` of ``log L``."""
    B = [np.ones_like(g[0])]
    for n in range(order):
        acc = np.zeros_like(g[0])
        for k in range(n + 1):
            acc = acc + math.comb(n, k) * g[k + 1] * B[n - k]
        B.append(acc)
    return B


# --------------------------------------------------------------------------
# Laplace transforms

@dataclass(frozen=True)
class LaplaceEvaluator:
    """Truncated-product evaluator for the shot-noise / interference transforms.

    ``exclude_center=True`` drops the serving window (interference seen by
    the typical UAV); ``False`` keeps it (full shot noise).
    """

    cfg: NetworkConfig
    exclude_center: bool = True
    truncation: ProductTruncation = ProductTruncation()
    quadrature: QuadratureSpec = QuadratureSpec()
    max_m: int = MAX_M

    def sigma(self, s):
        """Scaled Laplace argument ``s*p*omega/m``."""
        cfg = self.cfg
        return np.asarray(s, dtype=float) * (cfg.unit_power * cfg.omega / cfg.m)

    def noise_sigma(self, noise):
        cfg = self.cfg
        return noise * cfg.m / (cfg.unit_power * cfg.omega)

    def log_derivatives(self, sigma, order=0, noise_scaled=0.0, spec=None, k=None):
        """Derivatives of ``log L`` w.r.t. sigma, shape ``(order+1, len(sigma))``.

        Returns ``(g, k, tail)`` where ``tail`` bounds the relative effect of
        truncation at every sigma.
        """
        cfg = self.cfg
        spec = spec or self.quadrature
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        if np.any(sigma < 0):
            raise ValueError("Laplace argument must be >= 0")
        g = np.zeros((order + 1, sigma.size))
        if k is None:
            k = truncation_index(cfg, float(sigma.max(initial=0.0)), self.truncation)
        if _occupancy(cfg) > 0.0 and cfg.w > 0:
            for group in _window_groups(cfg, k, self.exclude_center, spec.n_inner):
                _log_factor_derivs(sigma, group, cfg, order, g)
            tail = _tail_coefficient(cfg, k) * sigma
        else:
            tail = np.zeros_like(sigma)
        g[0] -= noise_scaled * sigma
        if order >= 1:
            g[1] -= noise_scaled
        return g, k, tail

    def _log_value(self, s, noise, spec, k=None):
        noise_scaled = self.noise_sigma(noise) if noise else 0.0
        g, k, tail = self.log_derivatives(self.sigma(s), 0, noise_scaled, spec, k)
        return g[0], k, tail

    def evaluate(self, s, noise=0.0) -> AnalyticResult:
        """``L(s)`` (times ``exp(-s*noise)`` when noise > 0) with error budget."""
        s_arr = np.asarray(s, dtype=float)
        lg, k, tail = self._log_value(s_arr.ravel(), noise, self.quadrature)
        lg_c, _, _ = self._log_value(s_arr.ravel(), noise, self.quadrature.coarse(), k)
        val = np.exp(lg)
        qerr = np.abs(val - np.exp(lg_c))
        # omitted factors lie in [exp(-x), 1], x = tail / (1 - tail); tail >= 1 gives the trivial bound
        x = np.where(tail < 1.0, tail / np.maximum(1.0 - tail, 1e-300), np.inf)
        err_tail = -val * np.expm1(-x)
        shape = s_arr.shape
        return AnalyticResult(val.reshape(shape), qerr.reshape(shape), err_tail.reshape(shape), k)

    def factor(self, s, i, j=0) -> AnalyticResult:
        """Factor of window ``(i, j)`` alone, integrated with the full inner rule."""
        cfg = self.cfg
        sigma = np.atleast_1d(self.sigma(s))

        def one(n):
            grp = _single_window(cfg, i, j, n)
            g = np.zeros((1, sigma.size))
            _log_factor_derivs(sigma, grp, cfg, 0, g)
            return np.exp(g[0])

        if _occupancy(cfg) == 0.0 or cfg.w == 0:
            val = np.ones_like(sigma)
            return AnalyticResult(val.reshape(np.shape(s)), 0.0 * val.reshape(np.shape(s)))
        n = self.quadrature.n_inner
        val = one(n)
        err = np.abs(val - one(max(2, n // 2)))
        return AnalyticResult(val.reshape(np.shape(s)), err.reshape(np.shape(s)), 0.0, (i, j))

    def derivative_sum(self, s, m=None, noise=0.0, spec=None, k=None):
        """``sum_{k<m} (-s)^k/k! L^(k)(s)`` as a plain array (no error budget)."""
        sigma = np.atleast_1d(self.sigma(s))
        val, _, _ = self._derivative_sum_sigma(sigma, m, noise, spec, k)
        return val.reshape(np.shape(s))

    def _derivative_sum_sigma(self, sigma, m=None, noise=0.0, spec=None, k=None):
        m = self.cfg.m if m is None else int(m)
        if m < 1:
            raise ValueError("m must be >= 1")
        if m > self.max_m:
            raise ValueError(f"derivative order m={m} exceeds supported cap {self.max_m}")
        noise_scaled = self.noise_sigma(noise) if noise else 0.0
        g, k, tail = self.log_derivatives(sigma, m - 1, noise_scaled, spec, k)
        B = _bell_ratios(g, m - 1)
        acc = np.zeros_like(sigma)
        for n in range(m):
            acc = acc + (-sigma) ** n / math.factorial(n) * B[n]
        return np.exp(g[0]) * acc, k, tail


def _single_window(cfg, i, j, n):
    hw, hl = cfg.w / 2, cfg.l / 2
    cx = i * cfg.mu
    cy = j * cfg.nu if (cfg.is_2d and j) else 0.0
    ux, wx = gauss_legendre(n, cx - hw, cx + hw)
    uy, wy = gauss_legendre(n, cy - hl, cy + hl)
    X, Y = np.meshgrid(ux, uy, indexing="ij")
    W = np.outer(wx, wy).ravel() / (cfg.w * cfg.l)
    c = (X.ravel() ** 2 + Y.ravel() ** 2 + cfg.h ** 2) ** (-cfg.alpha / 2)
    return _NodeGroup(c=c, wt=W, starts=np.zeros(1, dtype=int), mult=np.ones(1))


def _as_evaluator(obj, exclude_center) -> LaplaceEvaluator:
    if isinstance(obj, NetworkConfig):
        return LaplaceEvaluator(obj, exclude_center=exclude_center)
    if obj.exclude_center != exclude_center:
        return replace(obj, exclude_center=exclude_center)
    return obj


def factor_window(ev, s, i, j=0) -> AnalyticResult:
    """Product factor of window ``(i, j)`` at Laplace argument ``s``."""
    ev = _as_evaluator(ev, True) if isinstance(ev, NetworkConfig) else ev
    return ev.factor(s, i, j)


def laplace_shot_noise(ev, s) -> AnalyticResult:
    """Laplace transform of the total shot noise at the typical UAV (all windows)."""
    return _as_evaluator(ev, False).evaluate(s)


def laplace_interference(ev, s) -> AnalyticResult:
    """Laplace transform of the interference (serving window removed)."""
    return _as_evaluator(ev, True).evaluate(s)


def laplace_interference_plus_noise(ev, s, noise=None) -> AnalyticResult:
    """``exp(-s*noise) * L_I(s)``; ``noise`` defaults to the config's noise power.

    A :class:`LaplaceEvaluator` with ``exclude_center=False`` gives the
    shot-noise-plus-noise form instead.
    """
    if isinstance(ev, NetworkConfig):
        ev = LaplaceEvaluator(ev)
    noise = ev.cfg.noise if noise is None else noise
    if noise < 0:
        raise ValueError("noise must be >= 0")
    return ev.evaluate(s, noise=noise)


def laplace_noise(s, noise):
    """Laplace transform ``exp(-s*noise)`` of a deterministic noise power."""
    return np.exp(-np.asarray(s, dtype=float) * noise)


def laplace_derivative_sum(ev, s, m=None, noise=0.0):
    """``sum_{i<m} (-s)^i/i! d^i/ds^i L_I(s)`` with exact derivatives."""
    if isinstance(ev, NetworkConfig):
        ev = LaplaceEvaluator(ev)
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be >= 0")
    return ev.derivative_sum(s, m, noise)


# --------------------------------------------------------------------------
# coverage, rate, harvested data

def _conditional_integral(ev: LaplaceEvaluator, spec: QuadratureSpec, k=None):
    """Mean over the serving window of the derivative sum at ``sigma = tau*d0**alpha``."""
    cfg = ev.cfg
    xs, wx = half_rule(spec.n_outer, cfg.w / 2)
    ys, wy = half_rule(spec.n_outer, cfg.l / 2)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    W = 4.0 * np.outer(wx, wy).ravel() / (cfg.w * cfg.l)
    sigma = cfg.tau * (X.ravel() ** 2 + Y.ravel() ** 2 + cfg.h ** 2) ** (cfg.alpha / 2)
    if k is None:
        corner = cfg.tau * (cfg.w ** 2 / 4 + cfg.l ** 2 / 4 + cfg.h ** 2) ** (cfg.alpha / 2)
        k = truncation_index(cfg, corner, ev.truncation)
    term, k, tail = ev._derivative_sum_sigma(sigma, noise=cfg.noise, spec=spec, k=k)
    value = float(W @ term)
    tail_abs = float(W @ (term * np.minimum(tail, 1.0)))
    return value, tail_abs, k


def _conditional(cfg: NetworkConfig, quadrature=None, truncation=None) -> AnalyticResult:
    if cfg.w == 0:
        return AnalyticResult(0.0)
    ev = LaplaceEvaluator(cfg, True, truncation or ProductTruncation(), quadrature or QuadratureSpec())
    spec = ev.quadrature
    while True:
        value, tail, k = _conditional_integral(ev, spec)
        coarse, _, _ = _conditional_integral(ev, spec.coarse(), k)
        err = abs(value - coarse)
        tol = spec.rtol * max(abs(value), 1e-6)
        if err <= tol or not spec.adaptive:
            break
        if spec.n_outer >= spec.n_max:
            raise ConvergenceError("coverage integral did not converge", err)
        spec = spec.refined()
    return AnalyticResult(value, err, tail, k, {"n_outer": spec.n_outer, "n_inner": spec.n_inner})


def conditional_coverage(cfg: NetworkConfig, quadrature=None, truncation=None) -> AnalyticResult:
    """Coverage of the typical UAV given that its window is non-empty."""
    return _conditional(cfg, quadrature, truncation)


def coverage_probability(cfg: NetworkConfig, quadrature=None, truncation=None) -> AnalyticResult:
    """SIR (SINR when ``cfg.noise > 0``) coverage probability of the typical UAV.

    Works for both 1-D and planar configs; the result lies in
    ``[0, 1 - exp(-lambda*w*l)]``.
    """
    cond = _conditional(cfg, quadrature, truncation)
    q1 = _occupancy(cfg)
    info = dict(cond.info, conditional=cond.value, occupancy=q1)
    return AnalyticResult(q1 * cond.value, q1 * cond.quad_error, q1 * cond.tail_bound,
                          cond.truncation, info)


def coverage_probability_2d(cfg: NetworkConfig, quadrature=None, truncation=None) -> AnalyticResult:
    if not cfg.is_2d:
        raise ValueError("coverage_probability_2d needs a planar ('2d') config")
    return coverage_probability(cfg, quadrature, truncation)


def _scale(res: AnalyticResult, factor, **info):
    return AnalyticResult(factor * res.value, factor * res.quad_error, factor * res.tail_bound,
                          res.truncation, dict(res.info, **info))


def mean_rate(cfg: NetworkConfig, modulation: ModulationRule | None = None,
              quadrature=None, truncation=None) -> AnalyticResult:
    """Mean rate ``log2(M) * P(SIR >= tau)`` in bit/s/Hz."""
    bits = (modulation or ModulationRule()).bits(cfg.tau)
    if bits == 0.0:
        return AnalyticResult(0.0, info={"bits": 0.0})
    return _scale(coverage_probability(cfg, quadrature, truncation), bits, bits=bits)


def mean_rate_2d(cfg: NetworkConfig, modulation=None, quadrature=None, truncation=None):
    if not cfg.is_2d:
        raise ValueError("mean_rate_2d needs a planar ('2d') config")
    return mean_rate(cfg, modulation, quadrature, truncation)


def conditional_rate(cfg: NetworkConfig, modulation=None, quadrature=None, truncation=None):
    """Rate of the typical UAV given a non-empty window."""
    bits = (modulation or ModulationRule()).bits(cfg.tau)
    if bits == 0.0:
        return AnalyticResult(0.0, info={"bits": 0.0})
    return _scale(_conditional(cfg, quadrature, truncation), bits, bits=bits)


def occupancy_per_device(cfg: NetworkConfig):
    """``(1 - exp(-K)) / K`` with ``K = lambda*w*l``; tends to 1 as K -> 0."""
    x = cfg.mean_devices
    return 1.0 if x == 0 else -math.expm1(-x) / x


def harvested_data(cfg: NetworkConfig, modulation=None, quadrature=None, truncation=None) -> AnalyticResult:
    """Mean data (bit/Hz) uploaded by the typical device during one UAV passage.

    Evaluated as ``log2(M) * (1-e^{-K})/K * (w/v) * conditional coverage``
    with ``K = lambda*w*l``, i.e. ``R * (w/v) / K``.  At ``lambda = 0`` the
    continuous limit (the device is always scheduled) is returned.
    """
    bits = (modulation or ModulationRule()).bits(cfg.tau)
    if cfg.w == 0 or bits == 0.0:
        return AnalyticResult(0.0, info={"bits": bits})
    factor = bits * occupancy_per_device(cfg) * cfg.w / cfg.v
    return _scale(_conditional(cfg, quadrature, truncation), factor, bits=bits)


def coverage_curve(cfg: NetworkConfig, taus: Sequence[float], **kw):
    """Coverage over a threshold grid (convenience for sweeps)."""
    return [coverage_probability(cfg.replace(tau=float(t)), **kw) for t in taus]
