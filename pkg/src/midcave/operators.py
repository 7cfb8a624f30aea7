"""Killed one-step transition operators on a uniform grid.

The operator ``(K f)(x) = int_{-a}^{a} k_dt(x - y) f(y) dy`` is discretised
by product integration: ``f`` is replaced by its piecewise-linear
interpolant on the grid and the kernel is integrated exactly against each
hat function.  This stays accurate when the kernel is much narrower than
the grid spacing, which happens for small ``dt`` and small ``alpha``
(kernel width ``dt**(1/alpha)``).

For ``alpha < 2`` the kernel is the subordination mixture
``k_dt = int p^2_s g_{alpha/2}(dt, s) ds`` over a log-spaced ``s`` rule, and
every hat integral of a Gaussian has a closed form.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .errors import DomainError
from .kernels import check_alpha, subordinator_log_rule
from .quadrature import _leggauss

# s-rule used inside kernel matrices: coarser than the pointwise default.
# The subordinator density in log s narrows like (1 - index) as the index
# approaches 1, so the panel width shrinks with it.
MIX_WIDTH = 1.0
MIX_ORDER = 8


def mixture_width(index: float) -> float:
    return min(MIX_WIDTH, 2.0 * (1.0 - index))


def _phi(z):
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def half_hat_gauss(d, sigma, h):
    """``int_0^h p_sigma(d - v) (1 - v/h) dv`` for a centred Gaussian ``p_sigma``.

    Broadcasts over ``d`` and ``sigma``.  Closed forms are arranged so
    that no large terms cancel; for ``sigma > 4h`` a 16-point
    Gauss-Legendre rule over the (smooth) integrand is used instead.
    """
    d = np.asarray(d, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    d, sigma = np.broadcast_arrays(d, sigma)
    out = np.empty(d.shape)

    wide = sigma > 4.0 * h
    if np.any(wide):
        g, w = _leggauss(16)
        v = 0.5 * h * (g + 1.0)
        dw, sw = d[wide][:, None], sigma[wide][:, None]
        dens = np.exp(-0.5 * ((dw - v) / sw) ** 2) / (sw * math.sqrt(2.0 * math.pi))
        out[wide] = (dens * (1.0 - v / h)) @ (0.5 * h * w)

    narrow = ~wide
    if np.any(narrow):
        dn, sn = d[narrow], sigma[narrow]
        res = np.empty(dn.shape)
        # far side: everything is a small upper-tail quantity
        up = dn >= 0.5 * h
        if np.any(up):
            du, su = dn[up], sn[up]
            z0, z1 = du / su, (du - h) / su
            q0 = ndtr(-z0)
            # psi_c(r) = sigma phi(r/sigma) - r Q(r/sigma), >= 0 and small for r >> sigma
            c0 = su * _phi(z0) - du * q0
            c1 = su * _phi(z1) - (du - h) * ndtr(-z1)
            res[up] = -q0 - (c0 - c1) / h
        lo = ~up
        if np.any(lo):
            dl, sl = dn[lo], sn[lo]
            z0, z1 = dl / sl, (dl - h) / sl
            p0 = ndtr(z0)
            psi0 = dl * p0 + sl * _phi(z0)
            psi1 = (dl - h) * ndtr(z1) + sl * _phi(z1)
            res[lo] = p0 - (psi0 - psi1) / h
        out[narrow] = res
    return np.maximum(out, 0.0)


def mixture_rule(alpha: float, dt: float):
    """Standard deviations and weights of the Gaussian mixture for one step.

    ``alpha = 2`` is the single Gaussian with variance ``2 dt``.
    """
    alpha = check_alpha(alpha)
    if alpha == 2.0:
        return np.array([math.sqrt(2.0 * dt)]), np.array([1.0])
    s, w = _unit_mixture(alpha / 2.0)
    s = s * dt ** (2.0 / alpha)
    keep = w > 0.0
    return np.sqrt(2.0 * s[keep]), w[keep]


@lru_cache(maxsize=32)
def _unit_mixture(index: float):
    s, w = subordinator_log_rule(index, 1.0, width=mixture_width(index), order=MIX_ORDER)
    s.setflags(write=False)
    w.setflags(write=False)
    return s, w


def hat_offsets(alpha: float, dt: float, h: float, offsets: np.ndarray) -> np.ndarray:
    """Mixture of ``half_hat_gauss`` over the subordinator rule at given offsets."""
    sig, w = mixture_rule(alpha, dt)
    out = np.zeros(np.shape(offsets))
    # chunk over sigma to bound memory
    for start in range(0, sig.size, 64):
        sl = slice(start, start + 64)
        vals = half_hat_gauss(offsets[None, :], sig[sl, None], h)
        out += w[sl] @ vals
    return out


class KilledStepOperator:
    """One step of the discrete-observation chain killed outside (-a, a).

    Parameters
    ----------
    grid : ndarray
        Uniform grid on [-a, a] including the endpoints.
    alpha : float
        Stability index in (0, 2].
    dt : float
        Time between observations.
    """

    def __init__(self, grid, alpha, dt):
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size < 3:
            raise DomainError("operator grid needs at least 3 points")
        if not dt > 0:
            raise DomainError("dt must be positive")
        self.grid = grid
        self.alpha = check_alpha(alpha)
        self.dt = float(dt)
        self.h = float(grid[1] - grid[0])
        n = grid.size
        k = np.arange(-(n - 1), n)
        e = hat_offsets(self.alpha, self.dt, self.h, k * self.h)
        i = np.arange(n)
        diff = i[:, None] - i[None, :]  # x_i - x_j in units of h
        right = e[diff + n - 1]         # E(x_i - x_j)
        left = e[-diff + n - 1]         # E(x_j - x_i)
        mat = right + left
        mat[:, 0] = right[:, 0]
        mat[:, -1] = left[:, -1]
        self.matrix = mat

    def __call__(self, f):
        return self.matrix @ f

    def rows_at(self, x) -> np.ndarray:
        """Operator rows for evaluation points off the grid."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        d = x[:, None] - self.grid[None, :]
        flat = d.ravel()
        right = hat_offsets(self.alpha, self.dt, self.h, flat).reshape(d.shape)
        left = hat_offsets(self.alpha, self.dt, self.h, -flat).reshape(d.shape)
        rows = right + left
        rows[:, 0] = right[:, 0]
        rows[:, -1] = left[:, -1]
        return rows


@lru_cache(maxsize=16)
def _cached_operator(grid_key: tuple, alpha: float, dt: float) -> KilledStepOperator:
    a, n = grid_key
    from .domain import uniform_grid
    return KilledStepOperator(uniform_grid(a, n), alpha, dt)


def step_operator(a: float, points: int, alpha: float, dt: float) -> KilledStepOperator:
    """Cached operator on ``uniform_grid(a, points)``."""
    return _cached_operator((float(a), int(points)), float(alpha), float(dt))


def chain_values(a: float, points: int, alpha: float, increments, x=None):
    """``P_x{X_{t_1} in I, ..., X_{t_n} in I}`` on the grid (or at ``x``).

    ``increments`` are ``t_i - t_{i-1}`` in time order; the first increment
    is applied last, as the outermost integral.
    """
    f = np.ones(points)
    incs = [float(d) for d in increments]
    for d in reversed(incs[1:]):
        f = step_operator(a, points, alpha, d)(f)
    first = step_operator(a, points, alpha, incs[0])
    if x is None:
        return first(f)
    return first.rows_at(x) @ f
