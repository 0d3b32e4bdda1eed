"""Tensor-product Gauss-Legendre rules on rectangles."""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

__all__ = ["QuadratureSpec", "ConvergenceError", "gauss_legendre", "rect_rule", "half_rule"]


class ConvergenceError(RuntimeError):
    """Raised when refinement cannot reach the requested tolerance."""

    def __init__(self, message, error_estimate):
        self.error_estimate = error_estimate
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3g})")


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts and tolerance for the window integrals.

    ``n_outer`` nodes per axis integrate over the serving window,
    ``n_inner`` per axis over nearby interfering windows (distant windows
    get fewer nodes, see ``analytic``).  Results are compared against a
    rule with half the nodes; when the difference exceeds ``rtol`` and
    ``adaptive`` is set, node counts are doubled up to ``n_max``.
    """

    scheme: str = "gauss-legendre"
    n_outer: int = 32
    n_inner: int = 32
    rtol: float = 1e-7
    adaptive: bool = True
    n_max: int = 128

    def __post_init__(self):
        if self.scheme != "gauss-legendre":
            raise ValueError(f"unsupported quadrature scheme {self.scheme!r}")
        for n in (self.n_outer, self.n_inner):
            if n < 2 or n % 2:
                raise ValueError("node counts must be even and >= 2")

    def coarse(self):
        return replace(self, n_outer=max(2, self.n_outer // 2 // 2 * 2),
                       n_inner=max(2, self.n_inner // 2 // 2 * 2))

    def refined(self):
        return replace(self, n_outer=2 * self.n_outer, n_inner=2 * self.n_inner)


@lru_cache(maxsize=64)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n, a, b):
    """Nodes and weights of the n-point rule on ``[a, b]``."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def half_rule(n, half_width):
    """Positive half of the symmetric n-point rule on ``[-a, a]`` (n even).

    For an even integrand ``f``, ``2 * sum(w * f(x))`` over the returned
    nodes equals the full rule exactly.
    """
    x, w = _leggauss(n)
    keep = x > 0
    return half_width * x[keep], half_width * w[keep]


def rect_rule(nx, ny, x0, x1, y0, y1):
    """Flattened tensor rule on ``[x0, x1] x [y0, y1]``."""
    xs, wx = gauss_legendre(nx, x0, x1)
    ys, wy = gauss_legendre(ny, y0, y1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    W = np.outer(wx, wy)
    return X.ravel(), Y.ravel(), W.ravel()
