import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from persistwalk import special
from persistwalk.errors import QuadratureError


def rational_series(x, nu, terms=50):
    """Truncated series in exact rationals; with x <= 10 the tail after 50 terms is far below 1e-30."""
    xq = Fraction(x) / 2
    return float(sum(xq ** (2 * m + nu) / (math.factorial(m) * math.factorial(m + nu)) for m in range(terms)))


def test_values_at_zero():
    assert special.bessel_i0(0.0) == 1.0
    assert special.bessel_i1(0.0) == 0.0
    assert special.bessel_i1_over_x(0.0) == 0.5


@pytest.mark.parametrize("x", [0.5, 2.0, 10.0])
def test_against_exact_rational_series(x):
    assert special.bessel_i0(x) == pytest.approx(rational_series(x, 0), rel=1e-15)
    assert special.bessel_i1(x) == pytest.approx(rational_series(x, 1), rel=1e-15)


def test_against_mpmath_on_a_wide_grid():
    xs = np.concatenate([np.linspace(0, 40, 401), [29.999, 30.0, 30.001, 55.5, 100.0, 300.0]])
    worst = 0.0
    for x in xs:
        for fn, nu in ((special.bessel_i0e, 0), (special.bessel_i1e, 1)):
            ref = float(mpmath.besseli(nu, x) * mpmath.exp(-x))
            if ref:
                worst = max(worst, abs(fn(x) - ref) / ref)
    assert worst < 1e-14


def test_unscaled_forms_agree_with_scaled():
    x = np.array([0.1, 5.0, 31.0, 200.0])
    np.testing.assert_allclose(special.bessel_i0(x) * np.exp(-x), special.bessel_i0e(x), rtol=1e-14)
    np.testing.assert_allclose(special.bessel_i1_over_x(x) * x, special.bessel_i1(x), rtol=1e-14)
    np.testing.assert_allclose(special.bessel_i1_over_x_e(x) * x, special.bessel_i1e(x), rtol=1e-14)


def test_negative_argument_rejected():
    with pytest.raises(ValueError):
        special.bessel_i0(-1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 200.0))
def test_wronskian_like_identity(x):
    # I0'(x) = I1(x): check by a central difference on the scaled form
    h = 1e-5 * max(1.0, x)
    d = (special.bessel_i0e(x + h) - special.bessel_i0e(x - h)) / (2 * h)
    # derivative of I0 e^{-x} is (I1 - I0) e^{-x}
    assert d == pytest.approx(special.bessel_i1e(x) - special.bessel_i0e(x), rel=1e-5, abs=1e-12)


def test_integrate_polynomial_and_exp():
    assert special.integrate(lambda x: x**2, 0.0, 1.0, order=2) == pytest.approx(1 / 3, abs=1e-15)
    assert special.integrate(np.exp, -1.0, 2.0) == pytest.approx(math.e**2 - math.exp(-1), rel=1e-13)
    assert special.integrate(np.cos, 0.0, 0.0) == 0.0


def test_integrate_adapts_to_a_peak():
    f = lambda x: 1.0 / (1e-4 + x * x)
    exact = 2 * math.atan(1 / 1e-2) / 1e-2
    assert special.integrate(f, -1.0, 1.0, tol=1e-12, max_panels=400) == pytest.approx(exact, rel=1e-10)


def test_integrate_errors():
    with pytest.raises(ValueError):
        special.integrate(np.sin, 1.0, 0.0)
    with pytest.raises(QuadratureError):
        special.integrate(lambda x: np.abs(x - 0.3) ** -0.5, 0.0, 1.0, tol=1e-14, max_panels=8)
    with pytest.raises(QuadratureError):
        special.integrate(lambda x: np.full_like(x, np.nan), 0.0, 1.0)


def test_gauss_legendre_rule():
    rule = special.gauss_legendre(5)
    assert rule.order == 5
    assert rule.weights.sum() == pytest.approx(2.0, abs=1e-15)
    # exact for degree 9
    assert rule.apply(lambda x: x**8, -1, 1) == pytest.approx(2 / 9, abs=1e-15)
    with pytest.raises(ValueError):
        special.gauss_legendre(0)
