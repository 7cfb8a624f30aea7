"""Survival probabilities, principal eigenvalues and ground states of the
killed process.

The discrete kernel is the one-step transition operator of the chain
observed at times ``dt, 2 dt, ...`` and killed on leaving the box.  Its
principal eigenvalue ``mu`` gives ``lambda(dt) = -log(mu) / dt``, which
tends to the continuous-time eigenvalue as ``dt -> 0``.

Two discretisations are used:

* ``alpha = 2``: Nystrom on composite Gauss-Legendre nodes with the
  Gaussian kernel, spectrally accurate in space, so the only error left is
  the ``dt`` expansion, which runs in powers of ``sqrt(dt)`` (the
  discrete-monitoring barrier shift is proportional to the step's standard
  deviation).
* ``alpha < 2``: product integration on the uniform grid
  (:class:`~midcave.operators.KilledStepOperator`), whose kernel may be far
  narrower than the grid spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np

from .chain import _as_box, fdd_stable
from .domain import DEFAULT_GRID, Box, Profile, Profile2D, TimeGrid, uniform_grid
from .errors import ConfigError, DomainError, NumericalError
from .kernels import check_alpha
from .operators import step_operator
from .quadrature import composite_rule

RESIDUAL_TOL = 1e-12
MAX_ITER = 100_000
BLOCK = 8
SERIES_TOL = 1e-14
MIN_GRID_1D = 129
MIN_GRID_2D = 65
DEFAULT_GRID_2D = 129

# the Gaussian ground-state vector carries a boundary layer of width
# sqrt(dt) that pointwise extrapolation cannot remove, so its schedule
# starts much finer than the eigenvalue-only schedules
GROUND_SCHEDULE = {2.0: (2.0 ** -11, 2.0 ** -12, 2.0 ** -13, 2.0 ** -14)}
SURVIVAL_SCHEDULE = {2.0: (1 / 64, 1 / 128, 1 / 256, 1 / 512)}
STABLE_SCHEDULE = (1 / 64, 1 / 128, 1 / 256)


def default_schedule(alpha: float, purpose: str = "ground") -> tuple[float, ...]:
    table = GROUND_SCHEDULE if purpose == "ground" else SURVIVAL_SCHEDULE
    return table.get(float(alpha), STABLE_SCHEDULE)


# -- Brownian exact series --------------------------------------------------

def brownian_eigenvalue(a: float, k: int = 1) -> float:
    """``k**2 pi**2 / (4 a**2)``: Dirichlet eigenvalues of the Laplacian on (-a, a)."""
    return k * k * math.pi ** 2 / (4.0 * a * a)


def survival_bm_exact(a: float, t: float, x) -> float:
    """``P_x{tau_(-a,a) > t}`` for Brownian motion with generator the Laplacian.

    Sum over odd ``k`` of ``4/(k pi) (-1)**((k-1)/2) cos(k pi x / 2a)
    exp(-k**2 pi**2 t / 4a**2)``, stopped once a term's bound drops below
    ``1e-14``.  At ``t = 0`` the answer is 1 by definition (the series only
    converges conditionally there).
    """
    a, t, x = float(a), float(t), float(x)
    if not a > 0:
        raise DomainError("half-width must be positive")
    if abs(x) >= a:
        raise DomainError(f"start point {x} is not inside (-{a}, {a})")
    if t < 0:
        raise DomainError("time must be nonnegative")
    if t == 0.0:
        return 1.0
    total, k = 0.0, 1
    while True:
        bound = 4.0 / (k * math.pi) * math.exp(-brownian_eigenvalue(a, k) * t)
        if bound < SERIES_TOL and k > 1:
            break
        sign = 1.0 if (k // 2) % 2 == 0 else -1.0
        total += sign * bound * math.cos(k * math.pi * x / (2.0 * a))
        k += 2
    return min(max(total, 0.0), 1.0)


# -- results ------------------------------------------------------------------

@dataclass
class EigenResult:
    """Principal eigenpair of the killed one-step kernel.

    ``dt`` is ``None`` for a result extrapolated across a ``dt`` schedule;
    ``diagnostics`` then holds the per-step eigenvalues and the fit.
    """

    lambda1: float
    groundstate: Profile | Profile2D
    dt: float | None
    iterations: int
    residual: float
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def summary(self) -> dict[str, Any]:
        return {"lambda1": self.lambda1, "dt": self.dt, "iterations": self.iterations,
                "residual": self.residual, **self.diagnostics}


@dataclass(frozen=True)
class SurvivalQuery:
    """Survival up to ``t`` observed at the ``steps`` times ``i t / steps``."""

    alpha: float
    box: Box
    t: float
    x: tuple[float, ...]
    steps: int

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        box = _as_box(self.box)
        object.__setattr__(self, "box", box)
        if not float(self.t) > 0:
            raise DomainError("survival time must be positive")
        object.__setattr__(self, "t", float(self.t))
        if int(self.steps) != self.steps or self.steps < 1:
            raise DomainError("need at least one observation step")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "x", tuple(box.check_inside(self.x).tolist()))


# -- power iteration ------------------------------------------------------------

def power_iteration(apply, n: int, start=None, block: int = BLOCK,
                    tol: float = RESIDUAL_TOL, max_iter: int = MAX_ITER):
    """Dominant eigenpair of a positive operator by block power iteration.

    ``apply`` maps an ``(n, b)`` array to its image.  The block is
    re-orthonormalised every step and the top Ritz pair is read off the
    projected ``b x b`` matrix, so convergence runs at the rate
    ``mu_{b+1} / mu_1`` instead of ``mu_2 / mu_1``.  ``block = 1`` is the
    plain power method.  Returns ``(mu, vector, iterations, residual)`` with
    the residual ``|A v - mu v|_inf / (mu |v|_inf)``.
    """
    v0 = np.ones(n) if start is None else np.asarray(start, dtype=float).copy()
    if v0.shape != (n,):
        raise DomainError("start vector has the wrong length")
    block = max(1, min(int(block), n))
    cols = [v0]
    # further columns are smooth, deterministic and mirror-symmetric
    s = np.linspace(-1.0, 1.0, n)
    for k in range(1, block):
        cols.append(np.cos(k * math.pi * (s + 1.0) / 2.0) ** 2 + 0.1 * k)
    q, _ = np.linalg.qr(np.column_stack(cols))
    residual = math.inf
    for it in range(1, max_iter + 1):
        w = apply(q)
        h = q.T @ w
        vals, vecs = np.linalg.eig(h)
        top = int(np.argmax(vals.real))
        mu = float(vals[top].real)
        y = vecs[:, top].real
        u = q @ y
        au = w @ y
        scale = np.max(np.abs(u))
        residual = float(np.max(np.abs(au - mu * u)) / (abs(mu) * scale))
        if residual < tol:
            u = u / u[np.argmax(np.abs(u))]
            return mu, u, it, residual
        q, _ = np.linalg.qr(w)
    raise NumericalError("power iteration did not converge", iterations=max_iter,
                         residual=residual)


# -- Gaussian Nystrom operator ------------------------------------------------

def _gauss(var, d):
    return np.exp(-d * d / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)


@lru_cache(maxsize=32)
def _nystrom(a: float, dt: float):
    """Nodes, weights and ``K[i, j] = p_{2dt}(y_i - y_j) w_j`` on (-a, a)."""
    var = 2.0 * dt
    y, w = composite_rule(-a, a, min(a / 8.0, math.sqrt(var)), 8)
    k = _gauss(var, y[:, None] - y[None, :]) * w[None, :]
    for arr in (y, w, k):
        arr.setflags(write=False)
    return y, w, k


def _nystrom_interp(a, dt, x, v, mu):
    y, w, _ = _nystrom(a, dt)
    return (_gauss(2.0 * dt, x[:, None] - y[None, :]) * w[None, :]) @ v / mu


def _normalise(values):
    # sup-norm 1 with a positive centre
    return values / values[np.unravel_index(np.argmax(np.abs(values)), values.shape)]


def _check_grid(grid, minimum):
    grid = int(grid)
    if grid < minimum:
        raise ConfigError(f"ground state needs at least {minimum} grid points per axis, got {grid}")
    return grid


def ground_state(alpha, box, dt: float, grid: int | None = None, start=None,
                 block: int = BLOCK) -> EigenResult:
    """Principal eigenpair of the one-step kernel killed outside ``box``.

    ``lambda1 = -log(mu) / dt``.  ``alpha = 2`` supports one- and
    two-dimensional boxes (the kernel is a tensor product); ``alpha < 2``
    supports intervals only.  ``start`` seeds the power iteration on the
    operator's own nodes.
    """
    alpha = check_alpha(alpha)
    box = _as_box(box)
    dt = float(dt)
    if not dt > 0:
        raise DomainError("dt must be positive")
    if alpha < 2.0 and box.dim > 1:
        raise ConfigError("alpha < 2 ground states in d >= 2 are only available by Monte Carlo")
    if box.dim > 2:
        raise ConfigError("ground states are implemented for d <= 2")
    if box.dim == 1:
        grid = _check_grid(DEFAULT_GRID if grid is None else grid, MIN_GRID_1D)
    else:
        grid = _check_grid(DEFAULT_GRID_2D if grid is None else grid, MIN_GRID_2D)
    meta = {"op": "ground_state", "alpha": alpha, "dt": dt,
            "halfwidths": list(box.halfwidths)}

    if alpha < 2.0:
        a = box.halfwidths[0]
        op = step_operator(a, grid, alpha, dt)
        mu, v, its, res = power_iteration(lambda q: op.matrix @ q, grid, start, block)
        prof = Profile(op.grid, _normalise(v), meta)
        return EigenResult(-math.log(mu) / dt, prof, dt, its, res)

    if box.dim == 1:
        a = box.halfwidths[0]
        y, _, k = _nystrom(a, dt)
        mu, v, its, res = power_iteration(lambda q: k @ q, y.size, start, block)
        x = uniform_grid(a, grid)
        prof = Profile(x, _normalise(_nystrom_interp(a, dt, x, v, mu)), meta)
        return EigenResult(-math.log(mu) / dt, prof, dt, its, res)

    (ax, ay) = box.halfwidths
    yx, _, kx = _nystrom(ax, dt)
    yy, _, ky = _nystrom(ay, dt)
    nx, ny = yx.size, yy.size

    def apply(q):
        m = q.T.reshape(-1, nx, ny)
        out = np.matmul(np.matmul(kx, m), ky.T)
        return out.reshape(m.shape[0], -1).T

    mu, v, its, res = power_iteration(apply, nx * ny, start, block)
    gx, gy = uniform_grid(ax, grid), uniform_grid(ay, grid)
    ex = _gauss(2.0 * dt, gx[:, None] - yx[None, :]) * _nystrom(ax, dt)[1][None, :]
    ey = _gauss(2.0 * dt, gy[:, None] - yy[None, :]) * _nystrom(ay, dt)[1][None, :]
    vals = ex @ v.reshape(nx, ny) @ ey.T / mu
    prof = Profile2D(gx, gy, _normalise(vals), meta=meta)
    return EigenResult(-math.log(mu) / dt, prof, dt, its, res)


# -- extrapolation in dt --------------------------------------------------------

def half_power_fit(dts, values):
    """Limit of ``v(dt) = v0 + c1 dt**0.5 + c2 dt + ...`` through all points."""
    dts = np.asarray(dts, dtype=float)
    basis = np.vstack([dts ** (0.5 * k) for k in range(dts.size)]).T
    coef = np.linalg.solve(basis, np.asarray(values, dtype=float))
    return coef[0]


def aitken_fit(dts, values, ref=None):
    """Limit of ``v(dt) = v0 + c dt**beta`` with ``beta`` estimated.

    The three ``dt`` values must halve.  ``ref`` (three scalars, by
    default ``values``) fixes the rate; vector values are then extrapolated
    with the same rate.  Returns ``(limit, beta)``.
    """
    dts = np.asarray(dts, dtype=float)
    if dts.size != 3 or not np.allclose(dts[1:] / dts[:-1], 0.5):
        raise ConfigError("rate-free extrapolation needs three halving dt values")
    vals = np.asarray(values, dtype=float)
    r0, r1, r2 = np.asarray(values if ref is None else ref, dtype=float)
    ratio = (r0 - r1) / (r1 - r2)
    if not ratio > 1.0:
        raise NumericalError("dt sequence is not converging monotonically",
                             values=[r0, r1, r2])
    return vals[2] - (vals[1] - vals[2]) / (ratio - 1.0), math.log2(ratio)


def extrapolate(alpha, dts, lambdas, vectors=None):
    """Extrapolated eigenvalue (and vector) with the rule used for ``alpha``."""
    lambdas = np.asarray(lambdas, dtype=float)
    if float(alpha) == 2.0:
        lam = float(half_power_fit(dts, lambdas))
        vec = None if vectors is None else half_power_fit(dts, vectors)
        return lam, vec, {"rule": "sqrt-dt powers"}
    lam, beta = aitken_fit(dts, lambdas)
    vec = None if vectors is None else aitken_fit(dts, vectors, ref=lambdas)[0]
    return float(lam), vec, {"rule": "free rate", "beta": beta}


def extrapolated_ground_state(alpha, box, dts=None, grid: int | None = None) -> EigenResult:
    """Ground state with ``dt -> 0`` extrapolation of eigenvalue and profile."""
    alpha = check_alpha(alpha)
    dts = tuple(default_schedule(alpha) if dts is None else dts)
    runs = [ground_state(alpha, box, dt, grid) for dt in dts]
    lams = [r.lambda1 for r in runs]
    vecs = np.array([r.groundstate.values for r in runs])
    lam, vec, diag = extrapolate(alpha, dts, lams, vecs)
    last = runs[-1].groundstate
    vec = _normalise(vec)
    meta = dict(last.meta, op="extrapolated_ground_state", dt=None, dts=list(dts))
    if isinstance(last, Profile2D):
        prof = Profile2D(last.x, last.y, vec, meta=meta)
    else:
        prof = Profile(last.grid, vec, meta)
    diag.update(dts=list(dts), lambdas=lams)
    return EigenResult(lam, prof, None, sum(r.iterations for r in runs),
                       max(r.residual for r in runs), diag)


# -- discrete-observation survival ------------------------------------------------

def _survival_sequence_1d(alpha, a, dt, steps, x, grid):
    """Survival at ``x`` after each step count in ``steps`` (sorted)."""
    if alpha == 2.0:
        y, w, k = _nystrom(a, dt)
        row = _gauss(2.0 * dt, float(x) - y) * w
        f = np.ones(y.size)
    else:
        op = step_operator(a, grid, alpha, dt)
        row = op.rows_at([x])[0]
        k = op.matrix
        f = np.ones(grid)
    out, done = [], 1
    for m in steps:
        while done < m:
            f = k @ f
            done += 1
        out.append(float(row @ f))
    return out


def survival_sequence(alpha, box, dt, steps, x=None, grid: int = DEFAULT_GRID):
    """``P_x{X_{i dt} in Q, i = 1..m}`` for each ``m`` in ``steps``."""
    alpha = check_alpha(alpha)
    box = _as_box(box)
    x = np.zeros(box.dim) if x is None else box.check_inside(x)
    steps = sorted(int(m) for m in steps)
    if steps[0] < 1:
        raise DomainError("need at least one observation step")
    if box.dim > 1 and alpha < 2.0:
        raise ConfigError("alpha < 2 survival in d >= 2 is only available by Monte Carlo")
    total = np.ones(len(steps))
    # Brownian coordinates are independent
    for xi, a in zip(x, box.halfwidths):
        total *= np.array(_survival_sequence_1d(alpha, a, float(dt), steps, xi, grid))
    return total.tolist()


def survival_discrete(q: SurvivalQuery, grid: int = DEFAULT_GRID) -> float:
    """Survival observed at ``steps`` equally spaced times up to ``q.t``.

    Stable coordinates are dependent, so ``alpha < 2`` in several
    dimensions goes through the tensor quadrature of ``fdd_stable`` and
    is limited to three steps.
    """
    dt = q.t / q.steps
    if q.alpha < 2.0 and q.box.dim > 1:
        return fdd_stable(q.x, q.alpha, TimeGrid.equal(q.t, q.steps), q.box, grid=grid)
    return survival_sequence(q.alpha, q.box, dt, [q.steps], q.x, grid)[0]


def survival_profile(alpha, a: float, t: float, steps: int, grid: int = DEFAULT_GRID) -> Profile:
    """Discrete-observation survival on the uniform grid of [-a, a]."""
    alpha = check_alpha(alpha)
    dt = float(t) / int(steps)
    x = uniform_grid(a, grid)
    if alpha == 2.0:
        y, w, k = _nystrom(float(a), dt)
        f = np.ones(y.size)
        for _ in range(int(steps) - 1):
            f = k @ f
        vals = (_gauss(2.0 * dt, x[:, None] - y[None, :]) * w[None, :]) @ f
    else:
        op = step_operator(a, grid, alpha, dt)
        f = np.ones(grid)
        for _ in range(int(steps)):
            f = op.matrix @ f
        vals = f
    return Profile(x, vals, {"op": "survival", "alpha": alpha, "t": float(t),
                             "steps": int(steps), "a": float(a)})


@dataclass
class DecayEstimate:
    """Eigenvalue from the decay of survival between two times."""

    lambda1: float
    t1: float
    t2: float
    dts: list[float]
    lambdas: list[float]
    window_gap: float
    diagnostics: dict[str, Any] = field(default_factory=dict)


def default_times(alpha, box) -> tuple[float, float]:
    """Times at which the proxy second-eigenvalue term is below 1e-6.

    The proxy is the Brownian gap ``3 pi**2 / 4`` on the unit interval,
    rescaled by ``a**-alpha``.
    """
    a = max(_as_box(box).halfwidths)
    gap = 0.75 * math.pi ** 2 * a ** (-check_alpha(alpha))
    t1 = math.log(1e6) / gap
    return t1, 2.0 * t1


def eigen_from_survival(alpha, box, t1: float | None = None, t2: float | None = None,
                        x=None, dts=None, grid: int = DEFAULT_GRID,
                        window_tol: float = 1e-6, max_doublings: int = 3) -> DecayEstimate:
    """``-log(S(t2) / S(t1)) / (t2 - t1)`` extrapolated in the step size.

    A second window ``[t2, 2 t2 - t1]`` checks that the higher modes have
    died out; while the two windows disagree by more than ``window_tol``
    (relative) all times are doubled.
    """
    alpha = check_alpha(alpha)
    box = _as_box(box)
    if t1 is None or t2 is None:
        d1, d2 = default_times(alpha, box)
        t1 = d1 if t1 is None else t1
        t2 = d2 if t2 is None else t2
    t1, t2 = float(t1), float(t2)
    if not (t2 > t1 > 0):
        raise DomainError("need t2 > t1 > 0")
    dts = tuple(default_schedule(alpha, "survival") if dts is None else dts)
    for attempt in range(max_doublings + 1):
        lams, second = [], []
        for dt in dts:
            m1, m2 = max(1, round(t1 / dt)), max(2, round(t2 / dt))
            m3 = 2 * m2 - m1
            s1, s2, s3 = survival_sequence(alpha, box, dt, [m1, m2, m3], x, grid)
            if s3 < 1e-290 or s2 < 1e-290:
                raise NumericalError("survival underflows; use smaller times", t2=t2, dt=dt)
            lams.append(-math.log(s2 / s1) / ((m2 - m1) * dt))
            second.append(-math.log(s3 / s2) / ((m3 - m2) * dt))
        gap = abs(lams[-1] - second[-1]) / abs(lams[-1])
        if gap <= window_tol:
            break
        if attempt < max_doublings:
            t1, t2 = 2.0 * t1, 2.0 * t2
    lam, _, diag = extrapolate(alpha, dts, lams)
    diag["converged_window"] = bool(gap <= window_tol)
    return DecayEstimate(lam, t1, t2, list(dts), lams, gap, diag)
