"""Iterated Gaussian convolutions over an interval and finite-dimensional
distributions of Brownian motion and stable processes in boxes.

``phi_chain`` builds ``Phi_k(x) = int_{-a}^{a} p_{t_k}(x - y) Phi_{k-1}(y) dy``
with ``Phi_0 = 1`` by Nystrom recursion on composite Gauss-Legendre nodes.
The integrand is analytic on [-a, a] and resolved once panels are no wider
than the kernel's standard deviation, so the recursion is spectrally
accurate and the values on the output grid come from the Nystrom
interpolant, not from a second discretisation.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .domain import (DEFAULT_GRID, Box, Interval, Profile, TimeGrid,
                     as_durations, uniform_grid)
from .errors import ConfigError, DomainError, UnsupportedSizeError
from .kernels import check_alpha
from .operators import chain_values, mixture_rule
from .quadrature import composite_rule

MAX_QUADRATURE_STEPS = 3
MC_MIN_SAMPLES = 1000


def _gauss(var, d):
    return np.exp(-d * d / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)


def _nodes(a: float, variances: Sequence[float], panel_width: float | None):
    if panel_width is None:
        panel_width = min(a / 8.0, math.sqrt(min(variances)))
    return composite_rule(-a, a, panel_width, 16)


class _Chain:
    """Nystrom recursion for Phi_k and Phi_k' at the quadrature nodes.

    Only the last step is deferred so that ``evaluate`` can interpolate at
    arbitrary points.
    """

    def __init__(self, variances, a, panel_width=None):
        self.a = a
        self.variances = list(variances)
        self.y, self.w = _nodes(a, self.variances, panel_width)
        pts = np.concatenate((self.y, [-a, a]))
        v = np.ones_like(self.y)
        dv = np.zeros_like(self.y)
        ends = np.ones(2)  # Phi_{k-1} at -a and a
        for var in self.variances[:-1]:
            val, der = self._step(var, pts, v, dv, ends)
            v, ends, dv = val[:-2], val[-2:], der[:-2]
        self.v, self.dv, self.ends = v, dv, ends

    def _step(self, var, x, v, dv, ends):
        a = self.a
        kern = _gauss(var, x[:, None] - self.y[None, :]) * self.w[None, :]
        val = kern @ v
        # derivative moved onto Phi_{k-1} by parts; boundary terms at -a and a
        der = ends[0] * _gauss(var, x + a) - ends[1] * _gauss(var, x - a) + kern @ dv
        return val, der

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        val, der = self._step(self.variances[-1], x.ravel(), self.v, self.dv, self.ends)
        return val.reshape(x.shape), der.reshape(x.shape)


def _grid_points(domain: Interval, grid) -> np.ndarray:
    if grid is None:
        grid = DEFAULT_GRID
    if np.isscalar(grid):
        return uniform_grid(domain.a, int(grid))
    g = np.asarray(grid, dtype=float)
    if np.any(np.abs(g) > domain.a * (1 + 1e-12)):
        raise DomainError("grid leaves the interval")
    return g


def phi_chain(durations, domain: Interval = Interval(1.0), grid=DEFAULT_GRID,
              panel_width: float | None = None) -> Profile:
    """Profile of ``Phi_n`` on a uniform grid of [-a, a].

    ``durations[k-1]`` is the variance of the Gaussian applied at step
    ``k``; the last duration is the outermost convolution.
    """
    durations = as_durations(durations)
    x = _grid_points(domain, grid)
    val, _ = _Chain(durations, domain.a, panel_width).evaluate(x)
    return Profile(x, val, {"op": "phi_chain", "durations": durations, "a": domain.a})


def phi_derivative(durations, domain: Interval = Interval(1.0), grid=DEFAULT_GRID,
                   panel_width: float | None = None) -> Profile:
    """Profile of ``Phi_n'`` by the integrated-by-parts recursion.

    ``Phi_n'(x) = Phi_{n-1}(-a) p(x+a) - Phi_{n-1}(a) p(x-a)
    + int p(x-y) Phi_{n-1}'(y) dy`` with ``p = p_{t_n}``.
    """
    durations = as_durations(durations)
    x = _grid_points(domain, grid)
    _, der = _Chain(durations, domain.a, panel_width).evaluate(x)
    return Profile(x, der, {"op": "phi_derivative", "durations": durations, "a": domain.a})


def phi_values(durations, a: float, x, panel_width: float | None = None):
    """``(Phi_n(x), Phi_n'(x))`` at arbitrary points of [-a, a]."""
    return _Chain(as_durations(durations), float(a), panel_width).evaluate(x)


def _as_timegrid(times) -> TimeGrid:
    return times if isinstance(times, TimeGrid) else TimeGrid(tuple(np.atleast_1d(times)))


def _as_box(box) -> Box:
    if isinstance(box, Box):
        return box
    if isinstance(box, Interval):
        return Box((box.a,))
    return Box(tuple(np.atleast_1d(box)))


def _gaussian_variances(times: TimeGrid) -> list[float]:
    # brownian_transition(d) is the Gaussian with variance 2d; the first
    # increment is the outermost integral
    return [2.0 * d for d in reversed(times.increments)]


def fdd_gaussian(x, times, box) -> float:
    """``P_x{B_{t_1} in Q, ..., B_{t_n} in Q}`` for Brownian motion with
    generator the Laplacian; a product of one-dimensional chains."""
    times, box = _as_timegrid(times), _as_box(box)
    x = box.check_inside(x)
    variances = _gaussian_variances(times)
    prob = 1.0
    for xi, a in zip(x, box.halfwidths):
        val, _ = _Chain(variances, a).evaluate(np.array([xi]))
        prob *= float(val[0])
    return prob


def fdd_gaussian_profile(times, domain: Interval = Interval(1.0), grid=DEFAULT_GRID) -> Profile:
    """The one-dimensional Brownian fdd probability as a function of the start."""
    times = _as_timegrid(times)
    x = _grid_points(domain, grid)
    val, _ = _Chain(_gaussian_variances(times), domain.a).evaluate(x)
    return Profile(x, val, {"op": "fdd_gaussian", "times": list(times.times), "a": domain.a})


def fdd_stable(x, alpha, times, box, method: str = "quadrature", grid: int = DEFAULT_GRID,
               samples: int = 1_000_000, seed: int = 0, batches: int = 10):
    """``P_x{X_{t_1} in Q, ..., X_{t_n} in Q}`` for the symmetric stable process.

    ``method="quadrature"`` mixes Gaussian chains over the subordinator
    increments and supports ``n <= 3``; ``method="montecarlo"`` returns an
    ``MCEstimate``.  ``alpha = 2`` is the Brownian chain itself.
    """
    alpha = check_alpha(alpha)
    times, box = _as_timegrid(times), _as_box(box)
    x = box.check_inside(x)
    if method == "montecarlo":
        if samples < MC_MIN_SAMPLES:
            raise ConfigError(f"Monte Carlo needs at least {MC_MIN_SAMPLES} samples")
        from .montecarlo import MCConfig, mc_fdd
        return mc_fdd(x, alpha, times, box, MCConfig(seed=seed, samples=samples, batches=batches))
    if method != "quadrature":
        raise ConfigError(f"unknown method {method!r}")
    if alpha == 2.0:
        return fdd_gaussian(x, times, box)
    if len(times) > MAX_QUADRATURE_STEPS:
        raise UnsupportedSizeError(
            f"quadrature covers at most {MAX_QUADRATURE_STEPS} observation times; "
            f"got {len(times)} (use method='montecarlo')")
    if box.dim == 1:
        return float(chain_values(box.halfwidths[0], grid, alpha, times.increments, x=x)[0])
    return _fdd_stable_tensor(x, alpha, times, box, grid)


def fdd_stable_profile(alpha, times, domain: Interval = Interval(1.0),
                       grid: int = DEFAULT_GRID) -> Profile:
    """One-dimensional stable fdd probability on the uniform grid."""
    alpha = check_alpha(alpha)
    times = _as_timegrid(times)
    if alpha == 2.0:
        prof = fdd_gaussian_profile(times, domain, grid)
        prof.meta["op"] = "fdd_stable"
        prof.meta["alpha"] = 2.0
        return prof
    x = uniform_grid(domain.a, int(grid))
    val = chain_values(domain.a, int(grid), alpha, times.increments)
    return Profile(x, val, {"op": "fdd_stable", "alpha": alpha,
                            "times": list(times.times), "a": domain.a})


def _fdd_stable_tensor(x, alpha, times, box, grid):
    """d >= 2: coordinates share the subordinator, so mix over the tensor
    grid of increments and multiply the coordinate chains inside the mixture."""
    amax = max(box.halfwidths)
    rules = []
    for d in times.increments:
        sig, w = mixture_rule(alpha, d)
        # drop nodes whose largest possible contribution is negligible
        reach = np.minimum(1.0, (2.0 * amax / (math.sqrt(2.0 * math.pi) * sig)) ** box.dim)
        keep = w * reach > 1e-13
        rules.append((sig[keep], w[keep]))
    points = min(int(grid), 129)
    total = None
    for xi, a in zip(x, box.halfwidths):
        coord = _coordinate_tensor(float(xi), a, rules, points)
        total = coord if total is None else total * coord
    weights = rules[0][1]
    for _, w in rules[1:]:
        weights = np.multiply.outer(weights, w)
    return float(np.sum(weights * total))


def _hat_matrix(grid, h, sigma):
    from .operators import half_hat_gauss
    n = grid.size
    e = half_hat_gauss(np.arange(-(n - 1), n) * h, sigma, h)
    i = np.arange(n)
    diff = i[:, None] - i[None, :] + n - 1
    right, left = e[diff], e[2 * (n - 1) - diff]
    m = right + left
    m[:, 0], m[:, -1] = right[:, 0], left[:, -1]
    return m


def _hat_row(grid, h, sigma, xi):
    from .operators import half_hat_gauss
    d = xi - grid
    right, left = half_hat_gauss(d, sigma, h), half_hat_gauss(-d, sigma, h)
    row = right + left
    row[0], row[-1] = right[0], left[-1]
    return row


def _coordinate_tensor(xi, a, rules, points):
    """Gaussian chain values at ``xi`` for every combination of mixture
    nodes; shape ``(len(rule_1), ..., len(rule_n))``."""
    grid = uniform_grid(a, points)
    h = float(grid[1] - grid[0])
    vecs = np.ones((1, grid.size))
    for sig, _ in reversed(rules[1:]):
        mats = np.stack([_hat_matrix(grid, h, s) for s in sig])
        vecs = np.einsum("kij,pj->kpi", mats, vecs).reshape(-1, grid.size)
    rows = np.stack([_hat_row(grid, h, s, xi) for s in rules[0][0]])
    vals = rows @ vecs.T
    return vals.reshape(tuple(len(r[0]) for r in rules))
