"""Grid verdicts for monotonicity, concavity, mid-concavity and log-concavity.

All checks work on undivided differences: a second difference
``f(x-h) - 2 f(x) + f(x+h)`` is a violation of concavity when positive.
The default tolerance ``1e-7 * max|f|`` is stated on that undivided
quantity, because quadrature noise in ``f`` is amplified by ``1/h**2`` in
the divided one.  The outermost grid point on each side is never used as
the centre of a stencil.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .domain import Profile, Profile2D
from .errors import DomainError

REL_TOL = 1e-7
CHAIN_REL_TOL = 1e-9
EPS = np.finfo(float).eps

PROPERTIES = ("monotone_center", "concave", "mid_concave", "log_concave",
              "midpoint_inequality")


@dataclass
class ShapeReport:
    property: str
    region: tuple[float, float]
    verdict: str
    worst_violation: float
    worst_location: float
    tolerance: float
    status: str
    noise: float = 0.0

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["region"] = list(self.region)
        return d


def make_report(prop, region, violations, locations, tolerance, noise) -> ShapeReport:
    if violations.size == 0:
        worst, where = 0.0, float("nan")
    else:
        # ties go to the location nearest the centre, then the left one
        top = violations.max()
        cand = np.nonzero(violations == top)[0]
        pick = cand[np.lexsort((locations[cand], np.abs(locations[cand])))[0]]
        worst, where = float(top), float(locations[pick])
    verdict = "pass" if worst <= tolerance else "fail"
    if verdict == "pass":
        status = "pass"
    elif abs(worst) < 3.0 * noise:
        status = "inconclusive"
    else:
        status = "fail"
    return ShapeReport(prop, (float(region[0]), float(region[1])), verdict,
                       worst, where, float(tolerance), status, float(noise))


def default_tolerance(values) -> float:
    return REL_TOL * float(np.max(np.abs(values))) if np.size(values) else 0.0


def chain_tolerance(values) -> float:
    """Tolerance for iterated-convolution profiles, which are accurate to
    near machine precision: ``1e-9 max|f|`` plus the rounding floor of a
    second difference."""
    scale = float(np.max(np.abs(values))) if np.size(values) else 0.0
    return CHAIN_REL_TOL * scale + 4.0 * EPS * scale


def _value_noise(p: Profile, values) -> float:
    return float(p.noise) + EPS * float(np.max(np.abs(values)))


def _region_mask(p: Profile, region) -> np.ndarray:
    x = p.grid
    inner = np.zeros(x.size, dtype=bool)
    inner[1:-1] = True
    if region is None:
        return inner
    lo, hi = region
    slack = 1e-9 * p.h
    return inner & (x >= lo - slack) & (x <= hi + slack)


def _second_differences(values, mask):
    """Second differences at centres whose whole stencil lies in ``mask``."""
    centre = np.zeros(values.size, dtype=bool)
    centre[1:-1] = mask[:-2] & mask[1:-1] & mask[2:]
    idx = np.nonzero(centre)[0]
    # (left + right) is symmetric, so mirrored profiles give identical numbers
    sd = (values[idx - 1] + values[idx + 1]) - 2.0 * values[idx]
    return sd, idx


def check_monotone_center(p: Profile, tolerance: float | None = None) -> ShapeReport:
    """Increasing for x < 0 and decreasing for x > 0, on first differences."""
    if not p.is_symmetric():
        raise DomainError("monotonicity about the centre needs a symmetric grid")
    f = p.values
    tol = default_tolerance(f) if tolerance is None else float(tolerance)
    mask = _region_mask(p, None)
    i = np.nonzero(mask[:-1] & mask[1:])[0]
    x0, x1 = p.grid[i], p.grid[i + 1]
    left, right = x1 <= 0.0, x0 >= 0.0
    viol = np.concatenate((f[i[left]] - f[i[left] + 1], f[i[right] + 1] - f[i[right]]))
    loc = np.concatenate((0.5 * (x0[left] + x1[left]), 0.5 * (x0[right] + x1[right])))
    region = (float(p.grid[1]), float(p.grid[-2]))
    return make_report("monotone_center", region, viol, loc, tol, 2.0 * _value_noise(p, f))


def check_concave(p: Profile, region=None, tolerance: float | None = None,
                  _prop: str = "concave") -> ShapeReport:
    """All second differences in ``region`` (closed, grid points) are <= tol."""
    mask = _region_mask(p, region)
    sd, idx = _second_differences(p.values, mask)
    if idx.size == 0:
        raise DomainError("concavity region holds fewer than 3 grid points")
    tol = default_tolerance(p.values) if tolerance is None else float(tolerance)
    sel = p.grid[mask]
    return make_report(_prop, (sel[0], sel[-1]), sd, p.grid[idx], tol,
                       4.0 * _value_noise(p, p.values))


def check_midconcave(p: Profile, tolerance: float | None = None) -> ShapeReport:
    """Concavity on the closed middle half [-a/2, a/2] of a symmetric grid."""
    if not p.is_symmetric():
        raise DomainError("mid-concavity needs a grid symmetric about 0")
    half = 0.5 * p.half_width
    return check_concave(p, (-half, half), tolerance, _prop="mid_concave")


def check_logconcave(p: Profile, region=None, tolerance: float | None = None) -> ShapeReport:
    mask = _region_mask(p, region)
    window = mask.copy()
    window[:-1] |= mask[1:]
    window[1:] |= mask[:-1]
    if np.any(p.values[window] <= 0.0):
        raise DomainError("log-concavity needs strictly positive values")
    logs = np.full(p.values.shape, np.nan)
    logs[window] = np.log(p.values[window])
    sd, idx = _second_differences(logs, mask)
    if idx.size == 0:
        raise DomainError("log-concavity region holds fewer than 3 grid points")
    scale = max(1.0, float(np.max(np.abs(logs[window]))))
    tol = REL_TOL * scale if tolerance is None else float(tolerance)
    fmin = float(np.min(p.values[window]))
    noise = 4.0 * (_value_noise(p, p.values) / fmin + EPS * scale)
    sel = p.grid[mask]
    return make_report("log_concave", (sel[0], sel[-1]), sd, p.grid[idx], tol, noise)


def check_midpoint_inequality(f_p: float, f_mid: float, f_q: float,
                              tolerance: float | None = None,
                              location: float = float("nan"), noise: float = 0.0) -> ShapeReport:
    """``f(mid) >= (f(p) + f(q)) / 2 - tol``; violation is the shortfall."""
    vals = np.array([f_p, f_mid, f_q], dtype=float)
    tol = default_tolerance(vals) if tolerance is None else float(tolerance)
    viol = 0.5 * (vals[0] + vals[2]) - vals[1]
    return make_report("midpoint_inequality", (float("nan"), float("nan")), np.array([viol]),
                       np.array([location]), tol, noise)


def worst_of(reports) -> ShapeReport:
    """The report with the largest violation relative to its tolerance."""
    reports = list(reports)
    return max(reports, key=lambda r: r.worst_violation - r.tolerance)


def check_midconcave_box(p: Profile2D, tolerance: float | None = None) -> ShapeReport:
    """Mid-concavity along every axis-parallel segment of a rectangle profile."""
    tol = default_tolerance(p.values[p.mask]) if tolerance is None else tolerance
    reports = [check_midconcave(p.row(j), tol) for j in range(1, p.y.size - 1)]
    reports += [check_midconcave(p.column(i), tol) for i in range(1, p.x.size - 1)]
    return worst_of(reports)


def check_monotone_box(p: Profile2D, tolerance: float | None = None) -> ShapeReport:
    tol = default_tolerance(p.values[p.mask]) if tolerance is None else tolerance
    reports = [check_monotone_center(p.row(j), tol) for j in range(1, p.y.size - 1)]
    reports += [check_monotone_center(p.column(i), tol) for i in range(1, p.x.size - 1)]
    return worst_of(reports)
