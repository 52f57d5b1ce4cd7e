"""Test payload functions: Gaussian forms, bump mollifier, derivative bundles."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itersim.functions import (
    Bump,
    GaussianForm,
    SmoothFunction,
    bump,
    gauss,
    gauss_function,
    linear,
    linear_cosh,
)


def test_gauss_point_values():
    assert gauss(0.0) == 1.0
    assert gauss(1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    xs = np.array([-2.0, 0.0, 0.5])
    np.testing.assert_allclose(gauss(xs), np.exp(-(xs**2)), rtol=1e-15)


def test_gaussian_form_parameters():
    g = GaussianForm(amplitude=2.0, center=1.0, variance=0.25)
    assert g(1.0) == 2.0
    assert g(1.5) == pytest.approx(2.0 * math.exp(-0.5 * 0.25 / 0.25), rel=1e-14)


def test_gaussian_form_rejects_bad_variance():
    with pytest.raises(ValueError):
        GaussianForm(variance=0.0)
    with pytest.raises(ValueError):
        GaussianForm(variance=-1.0)


def test_convolution_matches_numerical_integral():
    g = GaussianForm(amplitude=1.3, center=0.4, variance=0.7)
    mean, var = 0.2, 0.9
    collapsed = g.convolve_gaussian(mean, var)
    xi, wt = np.polynomial.legendre.leggauss(200)
    y = mean + 12.0 * math.sqrt(var) * xi
    pdf = np.exp(-((y - mean) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)
    numeric = 12.0 * math.sqrt(var) * np.sum(wt * g(y) * pdf)
    assert collapsed == pytest.approx(numeric, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    mean=st.floats(min_value=-2, max_value=2, allow_nan=False),
    var=st.floats(min_value=0.01, max_value=4, allow_nan=False),
)
def test_convolution_bounded_by_amplitude(mean, var):
    val = gauss.convolve_gaussian(mean, var)
    assert 0.0 < val <= gauss.amplitude


def test_derivative_bundle_matches_finite_differences():
    # Step sizes balance truncation against cancellation per stencil order.
    f = gauss_function
    for x in (-1.3, 0.0, 0.4, 2.1):
        h = 1e-5
        fd1 = (f(x + h) - f(x - h)) / (2 * h)
        assert f.d1(x) == pytest.approx(fd1, abs=1e-6)
        h = 1e-4
        fd2 = (f(x + h) - 2 * f(x) + f(x - h)) / h**2
        assert f.d2(x) == pytest.approx(fd2, abs=1e-5)
        h = 1e-3
        fd3 = (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h**3)
        assert f.d3(x) == pytest.approx(fd3, abs=1e-3)
        h = 0.05
        fd4 = (
            f(x + 2 * h) - 4 * f(x + h) + 6 * f(x) - 4 * f(x - h) + f(x - 2 * h)
        ) / h**4
        assert f.d4(x) == pytest.approx(fd4, abs=0.1)


def test_smooth_function_requires_value():
    sf = SmoothFunction(value=lambda x: x * 0.0 + 3.0)
    assert sf(0.7) == 3.0
    assert sf.d1 is None and sf.d4 is None


def test_bump_support_and_peak():
    assert bump(1.5) == 1.0
    assert bump(1.0) == 0.0
    assert bump(2.0) == 0.0
    assert bump(0.0) == 0.0
    assert bump(5.0) == 0.0
    inside = bump(np.linspace(1.01, 1.99, 101))
    assert np.all(inside > 0.0)
    assert np.all(np.isfinite(inside))


def test_bump_vanishes_smoothly_at_edges():
    eps = np.array([1.0 + 1e-12, 2.0 - 1e-12])
    vals = Bump()(eps)
    assert np.all(vals >= 0.0)
    assert np.all(vals < 1e-10)


def test_bump_rejects_bad_width():
    with pytest.raises(ValueError):
        Bump(half_width=0.0)


def test_linear_payloads():
    assert linear(0.3) == 0.3
    xs = np.array([1.0, -2.0])
    np.testing.assert_array_equal(linear(xs), xs)
    assert linear_cosh(2.0, 0.0) == 2.0
    assert linear_cosh(3.0, 1.0) == pytest.approx(3.0 * math.cosh(1.0), rel=1e-15)
