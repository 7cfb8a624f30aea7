import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from midcave.counterexamples import (Grid2D, RhombusDomain, axis_value, prop2_F,
                                     prop2_F_second_derivative, prop2_limit_integrals,
                                     prop2_threshold_scan, rhombus_ground_state,
                                     rhombus_midconcavity_scan, rhombus_midpoint)
from midcave.errors import ConfigError, DomainError


def gauss(t, d):
    return math.exp(-d * d / (2 * t)) / math.sqrt(2 * math.pi * t)


@settings(max_examples=20, deadline=None)
@given(t=st.floats(0.01, 3.0), x=st.floats(-1.0, 4.0))
def test_smoothed_sine_against_quad(t, x):
    ref = integrate.quad(lambda y: gauss(t, x - y) * math.sin(y), 0, math.pi, points=[x],
                         epsabs=1e-13, limit=200)[0]
    assert prop2_F(t, x) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(t=st.floats(0.01, 3.0), x=st.floats(-0.5, 0.5))
def test_second_derivative_against_finite_difference(t, x):
    h = 1e-3 * math.sqrt(t)
    fd = (prop2_F(t, x - h) - 2 * prop2_F(t, x) + prop2_F(t, x + h)) / h ** 2
    assert prop2_F_second_derivative(t, x) == pytest.approx(fd, rel=1e-4, abs=1e-6)


def test_full_line_smoothing_is_damped_sine():
    # far from the cut-off the truncated convolution is exp(-t/2) sin x
    t = 0.01
    assert prop2_F(t, math.pi / 2) == pytest.approx(math.exp(-t / 2), rel=1e-12)


def test_refinement_is_stable():
    assert prop2_F_second_derivative(0.05, 0.0, refine=2) == pytest.approx(
        prop2_F_second_derivative(0.05, 0.0), rel=1e-12)


def test_limit_integrals():
    lim = prop2_limit_integrals(0.01)
    assert lim["cubic"] == pytest.approx(2.0, abs=1e-10)
    assert lim["linear"] == pytest.approx(1.0, abs=1e-10)
    assert lim["quintic"] == pytest.approx(8 * 0.01 / 6, abs=1e-10)


def test_threshold_scan_finds_sign_change():
    scan = prop2_threshold_scan([0.1, 0.5, 1.0, 2.0, 3.0])
    assert all(r["sign"] == 1 for r in scan.rows[:3])
    assert 1.0 < scan.sign_change < 2.0
    assert abs(prop2_F_second_derivative(scan.sign_change, 0.0)) < 1e-10


@pytest.mark.parametrize("ts", [[], [0.5, 0.1], [0.0, 1.0]])
def test_threshold_scan_validation(ts):
    with pytest.raises((ConfigError, DomainError)):
        prop2_threshold_scan(ts)


def test_rhombus_domain():
    d = RhombusDomain(4)
    assert d.contains(0.0, 0.99) and not d.contains(2.0, 0.5) and d.contains(2.0, 0.49)
    assert d.rectangle_bound() == pytest.approx(math.pi ** 2 / 1.0 + math.pi ** 2 / 16)
    assert RhombusDomain(1).rectangle_bound() == math.inf
    with pytest.raises(DomainError):
        RhombusDomain(0.5)


@pytest.mark.parametrize("res", [16, 60, 8])
def test_rhombus_resolution_validation(res):
    with pytest.raises(ConfigError):
        Grid2D.for_rhombus(RhombusDomain(2), res)


def test_rotated_square_ground_state_closed_form():
    # D(1) is the square |x1| + |x2| < 1 with phi = (cos pi x1 + cos pi x2) / 2
    res = rhombus_ground_state(1, 64)
    prof = res.groundstate
    x = prof.x
    np.testing.assert_allclose(prof.values[:, 32], (1 + np.cos(np.pi * x)) / 2, atol=1e-12)
    assert res.lambda1 == pytest.approx(math.pi ** 2, rel=1e-3)
    assert res.residual < 1e-10


def test_rhombus_eigenvalue_below_rectangle_bound_and_converging():
    coarse, fine = rhombus_ground_state(16, 64), rhombus_ground_state(16, 128)
    assert fine.lambda1 < fine.diagnostics["rectangle_bound"]
    # the 5-point scheme approaches from below
    assert coarse.lambda1 < fine.lambda1
    assert abs(fine.lambda1 - coarse.lambda1) / fine.lambda1 < 5e-3


def test_midpoint_inequality_on_rhombus():
    assert rhombus_midpoint(rhombus_ground_state(1, 64).groundstate, 1).passed
    prof = rhombus_ground_state(16, 64).groundstate
    rep = rhombus_midpoint(prof, 16)
    assert rep.verdict == "fail"
    assert rep.worst_violation == pytest.approx(
        0.5 * (axis_value(prof, 0) + axis_value(prof, 8)) - axis_value(prof, 4))


def test_scan_threshold_and_refinement():
    scan = rhombus_midconcavity_scan((1, 4, 16), 64, refine=True, c_list=(0.25,))
    assert scan.threshold == 16
    assert not any(r["flipped"] for r in scan.rows)
    assert len(scan.c_sweep) == 3


@pytest.mark.parametrize("ns", [(), (4, 2)])
def test_scan_validation(ns):
    with pytest.raises(ConfigError):
        rhombus_midconcavity_scan(ns, 64)
