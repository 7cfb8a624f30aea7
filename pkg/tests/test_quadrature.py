import math

import numpy as np
import pytest

from midcave.quadrature import composite_rule, graded_edges, panels_rule, uniform_edges


@pytest.mark.parametrize("degree", [0, 5, 31])
def test_composite_rule_exact_for_polynomials(degree):
    x, w = composite_rule(-1.0, 2.0, 0.7, 16)
    assert np.dot(w, x ** degree) == pytest.approx((2.0 ** (degree + 1) - (-1.0) ** (degree + 1))
                                                   / (degree + 1), rel=1e-13)


def test_uniform_edges_respect_width():
    e = uniform_edges(0.0, 1.0, 0.3)
    assert len(e) == 5 and np.all(np.diff(e) <= 0.3 + 1e-15)
    assert len(uniform_edges(0.0, 1.0, 0.25)) == 5


def test_graded_rule_resolves_endpoint_singularity():
    x, w = panels_rule(graded_edges(0.0, 1.0), 16)
    assert np.dot(w, np.sqrt(x)) == pytest.approx(2.0 / 3.0, rel=1e-13)
    x, w = panels_rule(graded_edges(0.0, 1.0, toward="right"), 16)
    assert np.dot(w, np.sqrt(1.0 - x)) == pytest.approx(2.0 / 3.0, rel=1e-13)


def test_rule_is_gaussian_integral():
    x, w = composite_rule(-10.0, 10.0, 0.5)
    assert np.dot(w, np.exp(-x * x / 2)) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-14)
