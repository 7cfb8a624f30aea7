"""Transition densities of Brownian motion, symmetric stable processes and
the one-sided stable subordinator (d = 1).

Conventions: the symmetric ``alpha``-stable law at time ``t`` has
characteristic function ``exp(-t |xi|**alpha)``, so ``alpha = 2`` is
Brownian motion with generator the Laplacian (variance ``2 t``) and
``alpha = 1`` is the Cauchy process.  The subordinator of index
``beta = alpha / 2`` has Laplace transform ``exp(-t * lam**beta)``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import DomainError, NumericalError
from .quadrature import graded_edges, panels_rule, uniform_edges

FOURIER_EPS = 1e-12
MAX_FOURIER_NODES = 20_000_000


def check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha <= 2.0) or math.isnan(alpha):
        raise DomainError(f"alpha must lie in (0, 2], got {alpha!r}")
    return alpha


def check_index(index) -> float:
    index = float(index)
    if not (0.0 < index < 1.0):
        raise DomainError(f"subordinator index must lie in (0, 1), got {index!r}")
    return index


def _check_time(t) -> float:
    t = float(t)
    if not t > 0.0:
        raise DomainError(f"time must be positive, got {t!r}")
    return t


def gauss_density(t, x):
    """Standard Gaussian density with variance ``t``."""
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    out = np.exp(-x * x / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)
    return out if out.ndim else float(out)


def brownian_transition(t, x, y):
    """Transition density of Brownian motion with generator the Laplacian."""
    return gauss_density(2.0 * _check_time(t), np.subtract(x, y))


def cauchy_density(t, x):
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    out = t / (math.pi * (t * t + x * x))
    return out if out.ndim else float(out)


def _fourier_rule(alpha: float, t: float, x: float, eps: float):
    xi_max = (math.log(1.0 / eps) / t) ** (1.0 / alpha)
    width = math.pi / max(abs(x), 1.0)
    if xi_max <= width:
        edges = graded_edges(0.0, xi_max)
    else:
        edges = np.concatenate((graded_edges(0.0, width)[:-1],
                                uniform_edges(width, xi_max, width)))
    if 16 * (len(edges) - 1) > MAX_FOURIER_NODES:
        raise NumericalError("Fourier inversion needs too many panels",
                             alpha=alpha, t=t, x=x, xi_max=xi_max)
    return panels_rule(edges, 16)


def _stable_fourier_scalar(alpha: float, t: float, x: float, eps: float) -> float:
    xi, w = _fourier_rule(alpha, t, x, eps)
    values = np.exp(-t * xi ** alpha) * np.cos(xi * x)
    result = float(np.dot(w, values)) / math.pi
    if not math.isfinite(result):
        raise NumericalError("non-finite Fourier inversion", alpha=alpha, t=t, x=x)
    return result


def stable_density(alpha, t, x, method: str = "auto", eps: float = FOURIER_EPS):
    """Density of the symmetric ``alpha``-stable law at time ``t``.

    Parameters
    ----------
    alpha : float
        Index in (0, 2].
    t : float
        Time, positive.
    x : float or array_like
        Displacement.
    method : {"auto", "fourier"}
        ``"auto"`` uses the Gaussian and Cauchy closed forms for
        ``alpha`` equal to 2 and 1 and cosine inversion otherwise;
        ``"fourier"`` always inverts the characteristic function.
    eps : float
        Truncation level of the integrand ``exp(-t xi**alpha)``.
    """
    alpha = check_alpha(alpha)
    t = _check_time(t)
    if method == "auto":
        if alpha == 2.0:
            return gauss_density(2.0 * t, x)
        if alpha == 1.0:
            return cauchy_density(t, x)
    elif method != "fourier":
        raise ValueError(f"unknown method {method!r}")
    xs = np.asarray(x, dtype=float)
    out = np.array([_stable_fourier_scalar(alpha, t, float(v), eps)
                    for v in xs.ravel()]).reshape(xs.shape)
    return out if out.ndim else float(out)


def stable_density_scaling_check(alpha, t, x, method: str = "fourier") -> float:
    """Residual of ``p_t(x) = t**(-1/alpha) p_1(t**(-1/alpha) x)``."""
    alpha = check_alpha(alpha)
    t = _check_time(t)
    scale = t ** (-1.0 / alpha)
    lhs = stable_density(alpha, t, x, method=method)
    rhs = scale * stable_density(alpha, 1.0, scale * float(x), method=method)
    return abs(lhs - rhs)


def density_bound_constant(alpha) -> float:
    """``Gamma(1/alpha) / (pi alpha)``: the d = 1 sup of ``p_1``."""
    alpha = check_alpha(alpha)
    return float(gamma_fn(1.0 / alpha)) / (math.pi * alpha)


def density_upper_bound_check(alpha, t, x, method: str = "auto") -> bool:
    """True when ``p_t(x) <= C t**(-1/alpha)``.

    The bound is attained at ``x = 0``, so a relative slack of a few ulps
    absorbs quadrature rounding there.
    """
    alpha = check_alpha(alpha)
    t = _check_time(t)
    bound = density_bound_constant(alpha) * t ** (-1.0 / alpha)
    value = stable_density(alpha, t, x, method=method)
    return bool(value <= bound * (1.0 + 1e-12))


# -- one-sided stable subordinator ----------------------------------------

def _theta_rule():
    edges = np.concatenate((uniform_edges(0.0, math.pi * 63 / 64, math.pi / 64),
                            graded_edges(math.pi * 63 / 64, math.pi, ratio=0.3,
                                         levels=30, toward="right")[1:]))
    return panels_rule(edges, 16)


_THETA, _THETA_W = _theta_rule()


def _log_kanter(index: float, theta: np.ndarray) -> np.ndarray:
    """log of Kanter's function A(theta) on (0, pi)."""
    b = index
    return ((b / (1.0 - b)) * np.log(np.sin(b * theta))
            + np.log(np.sin((1.0 - b) * theta))
            - np.log(np.sin(theta)) / (1.0 - b))


def kanter_function(index, theta):
    index = check_index(index)
    return np.exp(_log_kanter(index, np.asarray(theta, dtype=float)))


def _unit_subordinator_density(index: float, s: np.ndarray) -> np.ndarray:
    """g(1, s) from the Zolotarev-Kanter single integral over (0, pi)."""
    s = np.asarray(s, dtype=float)
    flat = s.ravel()
    out = np.zeros_like(flat)
    log_a = _log_kanter(index, _THETA)
    expo = index / (1.0 - index)
    positive = flat > 0.0
    chunk = 512
    idx = np.nonzero(positive)[0]
    for start in range(0, idx.size, chunk):
        sel = idx[start:start + chunk]
        log_s = np.log(flat[sel])
        log_k = -expo * log_s
        # integrand A exp(-K A), assembled in logs to avoid overflow near pi
        log_ka = log_k[:, None] + log_a[None, :]
        ka = np.exp(np.minimum(log_ka, 700.0))
        integrand = np.exp(log_a[None, :] - ka)
        integral = integrand @ _THETA_W
        prefactor = (index / (1.0 - index)) * np.exp(-log_s / (1.0 - index)) / math.pi
        out[sel] = prefactor * integral
    return out.reshape(s.shape)


def subordinator_density(t, s, index):
    """Density ``g_index(t, s)`` of the one-sided stable subordinator.

    Computed by scaling from ``t = 1`` and the real integral
    ``g(1, s) = b/(1-b) s**(-1/(1-b)) / pi * int_0^pi A e^{-s**(-b/(1-b)) A}``
    with Kanter's function ``A``.
    """
    t = _check_time(t)
    index = check_index(index)
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise DomainError("subordinator density needs s >= 0")
    scale = t ** (-1.0 / index)
    out = scale * _unit_subordinator_density(index, s_arr * scale)
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite subordinator density", t=t, index=index)
    return out if out.ndim else float(out)


def subordinator_density_half(t, s):
    """Closed form of ``g_{1/2}(t, s)``: the Levy density."""
    t = _check_time(t)
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(s > 0,
                       t / math.sqrt(4.0 * math.pi) * s ** -1.5 * np.exp(-t * t / (4.0 * s)),
                       0.0)
    return out if out.ndim else float(out)


def subordinator_cdf(t, s, index):
    """``P(sigma_t <= s)`` from Kanter's representation."""
    t = _check_time(t)
    index = check_index(index)
    s = np.asarray(s, dtype=float) * t ** (-1.0 / index)
    log_a = _log_kanter(index, _THETA)
    with np.errstate(divide="ignore"):
        log_k = -(index / (1.0 - index)) * np.log(s.ravel())
    ka = np.exp(np.minimum(log_k[:, None] + log_a[None, :], 700.0))
    out = (np.exp(-ka) @ _THETA_W) / math.pi
    out = out.reshape(s.shape)
    return out if out.ndim else float(out)


def subordinator_log_rule(index, t=1.0, tail_eps: float = 1e-15,
                          width: float = 0.5, order: int = 16):
    """Quadrature for ``int_0^inf f(s) g_index(t, s) ds``.

    Returns nodes ``s`` and weights already multiplied by the density, so
    ``sum(w * f(s))`` approximates the mixture.  Nodes sit on a uniform grid
    in ``u = log(s / t**(1/index))``.  The lower end is where ``g`` is
    super-exponentially small; the upper end is where the heavy tail of a
    Gaussian mixture, ``~ s**(-1/2 - index)``, drops below ``tail_eps``.
    """
    index = check_index(index)
    t = _check_time(t)
    rate = (1.0 - index) * index ** (index / (1.0 - index))
    u_lo = -math.log(45.0 / rate) * (1.0 - index) / index
    u_hi = math.log(1.0 / tail_eps) / (0.5 + index)
    u, wu = panels_rule(uniform_edges(u_lo, u_hi, width), order)
    s_unit = np.exp(u)
    weights = wu * s_unit * _unit_subordinator_density(index, s_unit)
    return s_unit * t ** (1.0 / index), weights


def subordinator_laplace(t, lam, index) -> float:
    """``int_0^inf exp(-lam s) g_index(t, s) ds`` by quadrature."""
    s, w = subordinator_log_rule(index, t)
    return float(np.dot(w, np.exp(-float(lam) * s)))


def subordinated_density(alpha, t, x) -> float:
    """``int_0^inf p^2_s(x) g_{alpha/2}(t, s) ds``."""
    alpha = check_alpha(alpha)
    t = _check_time(t)
    if alpha == 2.0:
        return float(brownian_transition(t, x, 0.0))
    s, w = subordinator_log_rule(alpha / 2.0, t)
    x = float(x)
    return float(np.dot(w, np.exp(-x * x / (4.0 * s)) / np.sqrt(4.0 * math.pi * s)))


def subordination_identity_check(alpha, t, x) -> float:
    """Residual between Fourier inversion and the subordination integral."""
    alpha = check_alpha(alpha)
    if alpha == 2.0:
        raise DomainError("subordination identity needs alpha < 2")
    lhs = stable_density(alpha, t, x, method="fourier")
    return abs(lhs - subordinated_density(alpha, t, x))
