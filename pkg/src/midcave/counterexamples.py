"""The two negative results: a smoothed sine on (0, pi) that is not concave
near the edge for small times, and a long rhombus whose Brownian ground
state violates the midpoint inequality along its long axis.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import eigsh, splu

from .domain import Profile2D
from .eigen import EigenResult
from .errors import ConfigError, DomainError, NumericalError
from .quadrature import composite_rule
from .shape import check_midpoint_inequality

RAYLEIGH_TOL = 1e-10
DEFAULT_RESOLUTION = 128
MIN_RESOLUTION = 32
MIN_NODES_AT_HALF = 8
SCAN_N = (1, 4, 8, 16, 32, 64, 128)
SCAN_C = (0.25, 0.4, 0.49)


# -- smoothed sine -------------------------------------------------------------

def _check_t(t) -> float:
    t = float(t)
    if not t > 0:
        raise DomainError(f"time must be positive, got {t!r}")
    return t


def _sine_rule(t: float, refine: int = 1):
    width = min(math.pi / 16.0, math.sqrt(t)) / refine
    return composite_rule(0.0, math.pi, width, 16)


def prop2_F(t, x, refine: int = 1) -> float:
    """``F_t(x) = int_0^pi p_t(x - y) sin(y) dy`` with ``p_t`` of variance ``t``."""
    t = _check_t(t)
    y, w = _sine_rule(t, refine)
    d = float(x) - y
    return float(np.dot(w, np.exp(-d * d / (2.0 * t)) * np.sin(y)) / math.sqrt(2.0 * math.pi * t))


def prop2_F_second_derivative(t, x, refine: int = 1) -> float:
    """``F_t''(x)`` differentiated under the integral sign:
    ``(2 pi)**-0.5 t**-2.5 int_0^pi ((x-y)**2 - t) exp(-(x-y)**2 / 2t) sin y dy``."""
    t = _check_t(t)
    y, w = _sine_rule(t, refine)
    d2 = (float(x) - y) ** 2
    integrand = (d2 - t) * np.exp(-d2 / (2.0 * t)) * np.sin(y)
    return float(np.dot(w, integrand) / (math.sqrt(2.0 * math.pi) * t ** 2.5))


def prop2_limit_integrals(t: float = 0.01) -> dict[str, float]:
    """The three scaled integrals over ``(0, pi / sqrt(t))`` whose small-``t``
    limits are 2, 1 and 0 and force ``F_t''(0) > 0``."""
    t = _check_t(t)
    u, w = composite_rule(0.0, math.pi / math.sqrt(t), 0.5, 16)
    g = np.exp(-0.5 * u * u)
    return {"cubic": float(np.dot(w, u ** 3 * g)),
            "linear": float(np.dot(w, u * g)),
            "quintic": float(t / 6.0 * np.dot(w, u ** 5 * g))}


@dataclass
class ThresholdScan:
    rows: list[dict]
    sign_change: float | None
    limits: dict[str, float]

    def to_dict(self) -> dict:
        return asdict(self)


def prop2_threshold_scan(t_list, limit_t: float = 0.01) -> ThresholdScan:
    """Sign of ``F_t''(0)`` over ``t_list`` and where it first turns negative."""
    ts = [_check_t(t) for t in t_list]
    if not ts:
        raise ConfigError("empty t list")
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ConfigError("t list must be strictly increasing")
    vals = [prop2_F_second_derivative(t, 0.0) for t in ts]
    rows = [{"t": t, "F2_at_0": v, "sign": int(np.sign(v))} for t, v in zip(ts, vals)]
    change = None
    for (t0, v0), (t1, v1) in zip(zip(ts, vals), zip(ts[1:], vals[1:])):
        if v0 > 0 > v1:
            change = float(brentq(lambda s: prop2_F_second_derivative(s, 0.0), t0, t1,
                                  xtol=1e-12, rtol=1e-12))
            break
    return ThresholdScan(rows, change, prop2_limit_integrals(limit_t))


# -- rhombus ----------------------------------------------------------------------

@dataclass(frozen=True)
class RhombusDomain:
    """``{|x1| < n, |x2| < 1 - |x1| / n}``."""

    n: float

    def __post_init__(self):
        if not float(self.n) >= 1.0:
            raise DomainError(f"rhombus parameter must be >= 1, got {self.n!r}")
        object.__setattr__(self, "n", float(self.n))

    def contains(self, x1, x2):
        return np.abs(x2) < 1.0 - np.abs(x1) / self.n

    def rectangle_bound(self) -> float:
        """Eigenvalue of the inscribed rectangle ``(-sqrt n, sqrt n) x (-1 + 1/sqrt n, 1 - 1/sqrt n)``."""
        r = math.sqrt(self.n)
        if r <= 1.0:
            return math.inf
        return math.pi ** 2 / (2.0 - 2.0 / r) ** 2 + math.pi ** 2 / (2.0 * r) ** 2


@dataclass
class Grid2D:
    """Node-aligned grid: ``x1 = i n / N``, ``x2 = j / N`` for ``|i|, |j| <= N``.

    The rhombus edges ``|i| + |j| = N`` pass through nodes, and a node is
    kept iff it is strictly inside.
    """

    nx: int
    ny: int
    hx: float
    hy: float
    x: np.ndarray
    y: np.ndarray
    mask: np.ndarray

    @classmethod
    def for_rhombus(cls, dom: RhombusDomain, resolution: int) -> "Grid2D":
        resolution = int(resolution)
        if resolution < MIN_RESOLUTION:
            raise ConfigError(f"need at least {MIN_RESOLUTION} nodes across the short axis")
        if resolution % 8:
            raise ConfigError("resolution must be a multiple of 8 so n/4 and n/2 fall on nodes")
        big = resolution // 2
        if big // 2 - 1 < MIN_NODES_AT_HALF // 2:
            raise ConfigError("fewer than 8 nodes across the domain at x1 = n/2")
        idx = np.arange(-big, big + 1)
        mask = (np.abs(idx)[:, None] + np.abs(idx)[None, :]) < big
        return cls(idx.size, idx.size, dom.n / big, 1.0 / big, idx * (dom.n / big),
                   idx / big, mask)


def _dirichlet_laplacian(grid: Grid2D):
    """5-point ``-Laplacian`` on the masked nodes (zero outside)."""
    number = -np.ones(grid.mask.shape, dtype=np.int64)
    inside = np.argwhere(grid.mask)
    number[grid.mask] = np.arange(inside.shape[0])
    cx, cy = 1.0 / grid.hx ** 2, 1.0 / grid.hy ** 2
    rows, cols, vals = [np.arange(inside.shape[0])], [np.arange(inside.shape[0])], \
        [np.full(inside.shape[0], 2.0 * (cx + cy))]
    for (di, dj), c in (((1, 0), cx), ((-1, 0), cx), ((0, 1), cy), ((0, -1), cy)):
        ni, nj = inside[:, 0] + di, inside[:, 1] + dj
        ok = (ni >= 0) & (ni < grid.nx) & (nj >= 0) & (nj < grid.ny)
        nb = np.full(ni.shape, -1)
        nb[ok] = number[ni[ok], nj[ok]]
        keep = nb >= 0
        rows.append(np.nonzero(keep)[0])
        cols.append(nb[keep])
        vals.append(np.full(int(keep.sum()), -c))
    n = inside.shape[0]
    mat = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(n, n))
    return mat, inside


def _principal_pair(mat, max_polish: int = 20):
    """Smallest eigenpair of an SPD matrix: shift-invert Lanczos, then
    shifted inverse iteration until the Rayleigh residual is below tolerance."""
    n = mat.shape[0]
    v0 = np.ones(n)
    theta, vec = eigsh(mat, k=1, sigma=0.0, which="LM", v0=v0, tol=1e-13)
    theta, v = float(theta[0]), vec[:, 0]
    lu = splu((mat - (theta * (1.0 - 1e-9)) * sp.identity(n, format="csc")).tocsc())
    residual = math.inf
    for it in range(max_polish + 1):
        v = v / np.linalg.norm(v)
        av = mat @ v
        theta = float(v @ av)
        residual = float(np.linalg.norm(av - theta * v) / abs(theta))
        if residual < RAYLEIGH_TOL:
            return theta, v, it, residual
        v = lu.solve(v)
    raise NumericalError("rhombus eigen-iteration did not converge", residual=residual)


def rhombus_ground_state(n, resolution: int = DEFAULT_RESOLUTION) -> EigenResult:
    """Principal Dirichlet eigenpair of the Laplacian on ``D(n)``.

    ``resolution`` is the number of grid intervals across the short axis.
    The eigenvalue is for ``-Laplacian``; the profile is normalised to 1 at
    its maximum (the centre) and is 0 outside the mask.
    """
    dom = RhombusDomain(n)
    grid = Grid2D.for_rhombus(dom, resolution)
    mat, inside = _dirichlet_laplacian(grid)
    lam, v, its, res = _principal_pair(mat)
    vals = np.zeros(grid.mask.shape)
    vals[inside[:, 0], inside[:, 1]] = v
    vals /= vals[np.unravel_index(np.argmax(np.abs(vals)), vals.shape)]
    prof = Profile2D(grid.x, grid.y, vals, grid.mask,
                     {"op": "rhombus_ground_state", "n": dom.n, "resolution": int(resolution),
                      "hx": grid.hx, "hy": grid.hy})
    return EigenResult(lam, prof, None, its, res,
                       {"rectangle_bound": dom.rectangle_bound(), "nodes": int(inside.shape[0])})


def _axis(prof: Profile2D):
    j = prof.y.size // 2
    return prof.x, prof.values[:, j]


def axis_value(prof: Profile2D, x1: float) -> float:
    x, v = _axis(prof)
    return float(np.interp(x1, x, v))


def axis_decay_rate(prof: Profile2D, n: float) -> float:
    """Least-squares slope of ``-log phi(x1, 0)`` over ``x1`` in [n/4, n/2]."""
    x, v = _axis(prof)
    sel = (x >= n / 4 - 1e-12) & (x <= n / 2 + 1e-12) & (v > 0)
    if sel.sum() < 2:
        return float("nan")
    return float(-np.polyfit(x[sel], np.log(v[sel]), 1)[0])


def rhombus_midpoint(prof: Profile2D, n: float, c: float = 0.5):
    """Midpoint inequality along the long axis between 0 and ``c n``."""
    p, q = 0.0, c * n
    return check_midpoint_inequality(axis_value(prof, p), axis_value(prof, 0.5 * (p + q)),
                                     axis_value(prof, q), location=0.5 * (p + q))


@dataclass
class RhombusScan:
    rows: list[dict] = field(default_factory=list)
    threshold: float | None = None
    c_sweep: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def rhombus_midconcavity_scan(n_list=SCAN_N, resolution: int = DEFAULT_RESOLUTION,
                              refine: bool = True, c_list=()) -> RhombusScan:
    """Midpoint verdicts at ``(0,0), (n/4,0), (n/2,0)`` for each ``n``.

    With ``refine`` every ``n`` is solved again at twice the resolution;
    a verdict that changes under refinement is flagged.  ``threshold`` is
    the smallest failing ``n`` at the base resolution, an empirical value
    for this grid.
    """
    ns = [float(n) for n in n_list]
    if not ns:
        raise ConfigError("empty n list")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("n list must be strictly increasing")
    scan = RhombusScan()
    for n in ns:
        base = rhombus_ground_state(n, resolution)
        rep = rhombus_midpoint(base.groundstate, n)
        row = {"n": n, "lambda1": base.lambda1,
               "rectangle_bound": base.diagnostics["rectangle_bound"],
               "phi_0": axis_value(base.groundstate, 0.0),
               "phi_quarter": axis_value(base.groundstate, n / 4),
               "phi_half": axis_value(base.groundstate, n / 2),
               "verdict": rep.verdict, "violation": rep.worst_violation,
               "decay_rate": axis_decay_rate(base.groundstate, n)}
        if refine:
            fine = rhombus_ground_state(n, 2 * resolution)
            frep = rhombus_midpoint(fine.groundstate, n)
            row.update(refined_lambda1=fine.lambda1,
                       lambda_change=abs(fine.lambda1 - base.lambda1) / fine.lambda1,
                       refined_verdict=frep.verdict,
                       flipped=frep.verdict != rep.verdict)
        scan.rows.append(row)
        if scan.threshold is None and rep.verdict == "fail":
            scan.threshold = n
        for c in c_list:
            crep = rhombus_midpoint(base.groundstate, n, c)
            scan.c_sweep.append({"n": n, "c": float(c), "verdict": crep.verdict,
                                 "violation": crep.worst_violation})
    return scan
