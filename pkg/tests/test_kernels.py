import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from midcave.errors import DomainError, NumericalError
from midcave.kernels import (brownian_transition, cauchy_density, check_alpha,
                             density_bound_constant, density_upper_bound_check, gauss_density,
                             kanter_function, stable_density, stable_density_scaling_check,
                             subordinated_density, subordination_identity_check,
                             subordinator_cdf, subordinator_density,
                             subordinator_density_half, subordinator_laplace)


@pytest.mark.parametrize("alpha", [0.0, -1.0, 2.0001, 3.0, float("nan"), float("inf")])
def test_alpha_outside_range_rejected(alpha):
    with pytest.raises(DomainError, match=r"\(0, 2\]"):
        check_alpha(alpha)


def test_gaussian_convention_has_variance_2t():
    # exp(-t xi^2) is the characteristic function of N(0, 2t)
    x = np.linspace(-4, 4, 17)
    np.testing.assert_allclose(stable_density(2.0, 0.7, x), stats.norm.pdf(x, scale=math.sqrt(1.4)),
                               rtol=1e-14)
    assert gauss_density(1.0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert brownian_transition(0.5, 0.3, -0.2) == pytest.approx(stats.norm.pdf(0.5, scale=1.0))


def test_cauchy_centre_value():
    assert cauchy_density(1.0, 0.0) == pytest.approx(1 / math.pi, rel=1e-15)
    assert stable_density(1.0, 2.0, 2.0) == pytest.approx(stats.cauchy.pdf(1.0) / 2.0, rel=1e-14)


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
@pytest.mark.parametrize("x", [0.0, 0.5, 3.0])
def test_cauchy_fourier_matches_closed_form(t, x):
    assert stable_density(1.0, t, x, method="fourier") == pytest.approx(cauchy_density(t, x),
                                                                      abs=1e-10)


@pytest.mark.parametrize("alpha", [0.8, 1.2, 1.5, 1.9])
def test_fourier_matches_scipy_levy_stable(alpha):
    # scipy's S1 parametrisation with beta = 0 has characteristic function exp(-|xi|^alpha)
    x = np.array([0.0, 0.4, 1.7])
    ref = stats.levy_stable.pdf(x, alpha, 0.0)
    np.testing.assert_allclose(stable_density(alpha, 1.0, x, method="fourier"), ref, rtol=2e-6)


@pytest.mark.parametrize("alpha", [1.0, 1.5, 1.9])
def test_density_integrates_to_one(alpha):
    # mass beyond |x| = 50 from the leading tail term; its correction is
    # O(x^{-alpha}) relative, too big below alpha = 1
    body = integrate.quad(lambda v: stable_density(alpha, 1.0, v, method="fourier"), 0, 50,
                          limit=400, epsabs=1e-10)[0]
    tail = math.gamma(1 + alpha) * math.sin(math.pi * alpha / 2) / math.pi * 50 ** -alpha / alpha
    assert 2 * (body + tail) == pytest.approx(1.0, abs=2e-4)


@settings(max_examples=25, deadline=None)
@given(alpha=st.sampled_from([0.5, 1.0, 1.5]), t=st.floats(0.05, 5.0), x=st.floats(-3.0, 3.0))
def test_scaling_identity(alpha, t, x):
    assert stable_density_scaling_check(alpha, t, x) <= 1e-8


@settings(max_examples=25, deadline=None)
@given(alpha=st.sampled_from([0.5, 1.0, 1.5, 2.0]), t=st.floats(0.05, 10.0),
       x=st.floats(-5.0, 5.0))
def test_density_bound(alpha, t, x):
    assert density_upper_bound_check(alpha, t, x)


def test_bound_constant_attained_at_origin():
    for alpha in (0.5, 1.0, 1.5, 2.0):
        assert stable_density(alpha, 1.0, 0.0, method="fourier") == pytest.approx(
            density_bound_constant(alpha), rel=1e-10)


def test_kanter_function_endpoint():
    # A(0+) = (1-b) b^{b/(1-b)}
    b = 0.3
    assert kanter_function(b, 1e-9) == pytest.approx((1 - b) * b ** (b / (1 - b)), rel=1e-7)


def test_half_subordinator_matches_levy_closed_form():
    s = np.array([0.01, 0.1, 0.5, 2.0, 10.0])
    np.testing.assert_allclose(subordinator_density(1.3, s, 0.5), subordinator_density_half(1.3, s),
                               rtol=1e-10)


@pytest.mark.parametrize("index", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("lam", [0.3, 1.0, 4.0])
def test_subordinator_laplace_transform(index, lam):
    assert subordinator_laplace(0.8, lam, index) == pytest.approx(math.exp(-0.8 * lam ** index),
                                                                  abs=1e-10)


@pytest.mark.parametrize("index", [0.25, 0.75])
def test_subordinator_cdf_is_integral_of_density(index):
    s = 1.5
    mass = integrate.quad(lambda v: subordinator_density(1.0, v, index), 0, s, limit=200)[0]
    assert subordinator_cdf(1.0, s, index) == pytest.approx(mass, abs=1e-8)


def test_negative_subordinator_argument_rejected():
    with pytest.raises(DomainError):
        subordinator_density(1.0, -0.1, 0.5)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("x", [0.0, 0.7, 2.5])
def test_subordination_identity(alpha, x):
    assert subordination_identity_check(alpha, 1.0, x) <= 1e-5


def test_subordination_at_alpha_two_is_brownian():
    assert subordinated_density(2.0, 0.4, 0.3) == pytest.approx(gauss_density(0.8, 0.3))


def test_fourier_refuses_oversized_rule():
    with pytest.raises(NumericalError, match="too many panels"):
        stable_density(0.5, 1e-3, 0.0, method="fourier")
