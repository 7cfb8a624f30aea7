import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats
from scipy.special import ndtr

from midcave.chain import (fdd_gaussian, fdd_gaussian_profile, fdd_stable, fdd_stable_profile,
                           phi_chain, phi_derivative, phi_values)
from midcave.domain import Box, Interval, TimeGrid
from midcave.errors import DomainError, UnsupportedSizeError
from midcave.kernels import cauchy_density
from midcave.montecarlo import MCEstimate

durations = st.lists(st.floats(0.05, 2.0), min_size=1, max_size=5)


def one_step(a, var, x):
    s = math.sqrt(var)
    return ndtr((a - x) / s) - ndtr((-a - x) / s)


@pytest.mark.parametrize("var", [0.05, 0.5, 2.0])
@pytest.mark.parametrize("a", [0.5, 1.0, 3.0])
def test_single_convolution_closed_form(var, a):
    prof = phi_chain([var], Interval(a), 33)
    np.testing.assert_allclose(prof.values, one_step(a, var, prof.grid), atol=1e-14)


def rectangle(cov, lo, hi):
    return stats.multivariate_normal.cdf(hi, mean=np.zeros(len(lo)), cov=cov, lower_limit=lo,
                                         abseps=1e-12, releps=1e-12)


@pytest.mark.parametrize("t1,t2,x", [(0.3, 0.7, 0.2), (1.0, 0.1, -0.5), (0.05, 2.0, 0.9)])
def test_two_step_chain_matches_bivariate_normal(t1, t2, x):
    # Phi_2(x) = P(x + W in I, x + W + V in I) with W ~ N(0, t2), V ~ N(0, t1)
    cov = np.array([[t2, t2], [t2, t1 + t2]])
    ref = rectangle(cov, np.array([-1 - x] * 2), np.array([1 - x] * 2))
    val, _ = phi_values([t1, t2], 1.0, np.array([x]))
    assert val[0] == pytest.approx(ref, abs=1e-7)


@settings(max_examples=30, deadline=None)
@given(ds=durations, x=st.floats(-0.99, 0.99))
def test_derivative_matches_finite_difference(ds, x):
    h = 1e-5
    _, der = phi_values(ds, 1.0, np.array([x]))
    val, _ = phi_values(ds, 1.0, np.array([x - h, x + h]))
    assert der[0] == pytest.approx((val[1] - val[0]) / (2 * h), abs=1e-7)


@settings(max_examples=30, deadline=None)
@given(ds=durations)
def test_phi_is_a_probability_and_even(ds):
    prof = phi_chain(ds, Interval(1.0), 65)
    assert np.all(prof.values >= -1e-15) and np.all(prof.values <= 1 + 1e-14)
    np.testing.assert_allclose(prof.values, prof.values[::-1], atol=1e-14)
    np.testing.assert_allclose(phi_derivative(ds, Interval(1.0), 65).values[32], 0.0, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(ds=st.lists(st.floats(0.05, 2.0), min_size=2, max_size=5), x=st.floats(-0.9, 0.9))
def test_extra_observation_lowers_probability(ds, x):
    # the first duration is the innermost step
    full, _ = phi_values(ds, 1.0, np.array([x]))
    fewer, _ = phi_values(ds[1:], 1.0, np.array([x]))
    assert full[0] <= fewer[0] + 1e-14


def test_brownian_fdd_speed_two():
    t1, t2, x = 0.3, 1.0, 0.25
    cov = 2 * np.array([[t1, t1], [t1, t2]])
    ref = rectangle(cov, np.array([-1 - x] * 2), np.array([1 - x] * 2))
    assert fdd_gaussian([x], (t1, t2), Box((1.0,))) == pytest.approx(ref, abs=1e-7)


def test_brownian_fdd_in_box_factorises():
    times, x = (0.2, 0.9), [0.1, -0.3]
    p = fdd_gaussian(x, times, Box((1.0, 0.5)))
    assert p == pytest.approx(fdd_gaussian([0.1], times, Box((1.0,)))
                              * fdd_gaussian([-0.3], times, Box((0.5,))), rel=1e-14)


def test_profile_agrees_with_pointwise():
    prof = fdd_gaussian_profile((0.4, 1.0), Interval(1.0), 17)
    assert prof.values[5] == pytest.approx(fdd_gaussian([prof.grid[5]], (0.4, 1.0), (1.0,)),
                                           rel=1e-14)


@pytest.mark.parametrize("x", [0.0, 0.6, -0.95])
def test_cauchy_single_time_closed_form(x):
    t = 0.4
    ref = (math.atan((1 - x) / t) + math.atan((1 + x) / t)) / math.pi
    assert fdd_stable([x], 1.0, (t,), (1.0,)) == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("x,t1,t2", [(0.3, 0.3, 1.0), (0.0, 0.05, 0.1), (0.9, 0.5, 0.6)])
def test_cauchy_two_times_against_nested_quad(x, t1, t2):
    def inner(y):
        return (math.atan((1 - y) / (t2 - t1)) + math.atan((1 + y) / (t2 - t1))) / math.pi
    ref = integrate.quad(lambda y: cauchy_density(t1, y - x) * inner(y), -1, 1,
                         epsabs=1e-13, limit=200)[0]
    assert fdd_stable([x], 1.0, (t1, t2), (1.0,)) == pytest.approx(ref, abs=5e-6)


def test_stable_profile_symmetric_and_decreasing_in_alpha_range():
    for alpha in (0.5, 1.5):
        prof = fdd_stable_profile(alpha, (0.5, 1.0), Interval(1.0), 129)
        np.testing.assert_allclose(prof.values, prof.values[::-1], atol=1e-13)
        assert prof.values.argmax() == 64


def test_stable_two_dimensional_box():
    p = fdd_stable([0.1, 0.0], 1.0, (0.5,), Box((1.0, 1.0)), grid=129)
    # the components of a rotation-invariant Cauchy vector are dependent, so
    # the box probability exceeds the product of its marginals
    marg = fdd_stable([0.1], 1.0, (0.5,), (1.0,)) * fdd_stable([0.0], 1.0, (0.5,), (1.0,))
    assert marg < p < min(fdd_stable([0.1], 1.0, (0.5,), (1.0,)), 1.0)


def test_quadrature_limited_to_three_times():
    with pytest.raises(UnsupportedSizeError, match="montecarlo"):
        fdd_stable([0.0], 1.0, (0.1, 0.2, 0.3, 0.4), (1.0,))


def test_montecarlo_method_returns_estimate():
    est = fdd_stable([0.0], 1.0, (0.1, 0.2, 0.3, 0.4), (1.0,), method="montecarlo",
                     samples=20_000, seed=3)
    assert isinstance(est, MCEstimate)
    assert 0 < est.mean < 1 and est.stderr > 0


def test_start_outside_box_rejected():
    with pytest.raises(DomainError):
        fdd_stable([1.0], 1.0, (0.5,), (1.0,))


@pytest.mark.parametrize("bad", [(), (0.5, 0.5), (1.0, 0.5), (-0.1, 1.0)])
def test_time_grid_validation(bad):
    with pytest.raises(DomainError):
        TimeGrid(bad)
