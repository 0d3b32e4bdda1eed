import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uavharvest.quadrature import QuadratureSpec, gauss_legendre, half_rule, rect_rule


@given(st.integers(1, 20), st.floats(-5, 5), st.floats(0.1, 10))
def test_exact_for_low_degree_polynomials(n, a, width):
    b = a + width
    x, w = gauss_legendre(n, a, b)
    for deg in range(0, 2 * n):
        exact = (b ** (deg + 1) - a ** (deg + 1)) / (deg + 1)
        assert np.dot(w, x ** deg) == pytest.approx(exact, rel=1e-9, abs=1e-9 * width ** (deg + 1))


@given(st.sampled_from([2, 4, 8, 32]), st.floats(0.1, 100))
def test_half_rule_reproduces_full_rule_for_even_functions(n, a):
    x, w = gauss_legendre(n, -a, a)
    xh, wh = half_rule(n, a)
    f = lambda t: 1.0 / (1.0 + (t / a) ** 2)
    assert 2 * np.dot(wh, f(xh)) == pytest.approx(np.dot(w, f(x)), rel=1e-13)


def test_rect_rule_area_and_moment():
    X, Y, W = rect_rule(6, 4, 0.0, 2.0, -1.0, 3.0)
    assert W.sum() == pytest.approx(8.0)
    assert np.dot(W, X * Y ** 2) == pytest.approx(2.0 * (27 + 1) / 3)


def test_smooth_integrand_converges():
    x, w = gauss_legendre(32, 0.0, math.pi)
    assert np.dot(w, np.sin(x)) == pytest.approx(2.0, abs=1e-14)


def test_spec_validation_and_refinement():
    spec = QuadratureSpec()
    assert spec.refined().n_outer == 64 and spec.coarse().n_outer == 16
    with pytest.raises(ValueError):
        QuadratureSpec(n_outer=7)
    with pytest.raises(ValueError):
        QuadratureSpec(scheme="simpson")
