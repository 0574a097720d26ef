import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sc

from ginibre_fcs.quadrature import (
    QuadSpec,
    ToleranceNotMet,
    integrate_1d,
    integrate_2d,
    integrate_real_line,
    integrate_semi_inf,
)


def test_erfc_over_half_line():
    val, err = integrate_semi_inf(sc.erfc, 0.0)
    assert val == pytest.approx(1 / math.sqrt(math.pi), rel=1e-13)
    assert err < 1e-10


def test_gaussian_over_real_line():
    val, _ = integrate_real_line(lambda x: np.exp(-x * x))
    assert val == pytest.approx(math.sqrt(math.pi), rel=1e-13)


def test_negative_direction():
    val, _ = integrate_semi_inf(lambda x: np.exp(x), 0.0, direction=-1)
    assert val == pytest.approx(1.0, rel=1e-13)


def test_endpoint_singularity():
    # integrable x^{-1/2} singularity at 0; bisection is limited by the
    # smallest allowed panel, so only a moderate tolerance is reachable
    val, err = integrate_1d(lambda x: 1 / np.sqrt(x), 0.0, 1.0, QuadSpec(abs_tol=1e-6, rel_tol=1e-6))
    assert val == pytest.approx(2.0, rel=1e-6)
    assert err <= 2e-6


def test_oscillatory():
    val, _ = integrate_1d(np.cos, 0.0, 100.0)
    assert val == pytest.approx(math.sin(100.0), abs=1e-11)


def test_vector_valued_integrand():
    def f(x):
        return np.vstack([x, x * x, np.exp(x)])

    val, err = integrate_1d(f, 0.0, 1.0)
    assert np.allclose(val, [0.5, 1 / 3, math.e - 1], rtol=1e-14)
    assert err.shape == (3,)


def test_tolerance_not_met():
    with pytest.raises(ToleranceNotMet) as info:
        integrate_1d(lambda x: np.sign(x - 1 / 3) * np.abs(x - 1 / 3) ** -0.9, 0.0, 1.0,
                     QuadSpec(abs_tol=1e-15, rel_tol=1e-15, max_subdiv=64))
    assert info.value.value is not None


def test_2d_box():
    val, _ = integrate_2d(lambda x, y: np.exp(-(x - y) ** 2), (0.0, 2.0, 0.0, 2.0))
    ref = 2 * math.sqrt(math.pi) * math.erf(2) - 1 + math.exp(-4)
    assert val == pytest.approx(ref, rel=1e-13)


def test_2d_product_separates():
    val, _ = integrate_2d(lambda x, y: np.sin(x) * np.exp(-y), (0.0, math.pi, 0.0, 3.0))
    assert val == pytest.approx(2 * (1 - math.exp(-3)), rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 12), st.floats(-3, 3), st.floats(0.1, 4))
def test_polynomials_exact(k, a, w):
    b = a + w
    val, _ = integrate_1d(lambda x: x**k, a, b)
    ref = (b ** (k + 1) - a ** (k + 1)) / (k + 1)
    assert val == pytest.approx(ref, rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(0.1, 3), st.floats(0.1, 3))
def test_additivity(a, w1, w2):
    f = lambda x: np.exp(-x * x) * np.cos(3 * x)  # noqa: E731
    whole, _ = integrate_1d(f, a, a + w1 + w2)
    left, _ = integrate_1d(f, a, a + w1)
    right, _ = integrate_1d(f, a + w1, a + w1 + w2)
    assert whole == pytest.approx(left + right, abs=1e-12)


def test_deterministic():
    f = lambda x: np.exp(-x) * np.sin(10 * x)  # noqa: E731
    assert integrate_1d(f, 0, 5) == integrate_1d(f, 0, 5)
