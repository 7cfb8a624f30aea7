"""Domains, time grids and profiles shared by every module."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import DomainError

DEFAULT_GRID = 513


@dataclass(frozen=True)
class Interval:
    """The open interval (-a, a)."""

    a: float = 1.0

    def __post_init__(self):
        if not float(self.a) > 0.0:
            raise DomainError(f"half-width must be positive, got {self.a!r}")
        object.__setattr__(self, "a", float(self.a))

    def contains(self, x) -> bool:
        return bool(abs(float(x)) < self.a)


@dataclass(frozen=True)
class Box:
    """Coordinate rectangle prod_i (-a_i, a_i)."""

    halfwidths: tuple[float, ...]

    def __post_init__(self):
        hw = tuple(float(a) for a in np.atleast_1d(self.halfwidths))
        if not hw:
            raise DomainError("a box needs at least one dimension")
        if any(not a > 0.0 for a in hw):
            raise DomainError(f"half-widths must be positive, got {hw!r}")
        object.__setattr__(self, "halfwidths", hw)

    @classmethod
    def cube(cls, a: float, d: int = 1) -> "Box":
        return cls((a,) * d)

    @property
    def dim(self) -> int:
        return len(self.halfwidths)

    def intervals(self) -> list[Interval]:
        return [Interval(a) for a in self.halfwidths]

    def check_inside(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise DomainError(f"point {x.tolist()} does not match a {self.dim}-d box")
        if np.any(np.abs(x) >= np.asarray(self.halfwidths)):
            raise DomainError(f"point {x.tolist()} is not strictly inside the box")
        return x


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing positive observation times."""

    times: tuple[float, ...]

    def __post_init__(self):
        ts = tuple(float(t) for t in np.atleast_1d(self.times))
        if not ts:
            raise DomainError("a time grid needs at least one time")
        if ts[0] <= 0.0:
            raise DomainError("observation times must be positive")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise DomainError("observation times must be strictly increasing")
        object.__setattr__(self, "times", ts)

    @classmethod
    def equal(cls, t: float, m: int) -> "TimeGrid":
        """Times ``i t / m`` for ``i = 1..m``."""
        if m < 1:
            raise DomainError("need at least one observation")
        return cls(tuple(t * i / m for i in range(1, m + 1)))

    @property
    def increments(self) -> list[float]:
        prev = (0.0,) + self.times[:-1]
        return [b - a for a, b in zip(prev, self.times)]

    def __len__(self) -> int:
        return len(self.times)


def uniform_grid(a: float, points: int = DEFAULT_GRID) -> np.ndarray:
    """Symmetric uniform grid on [-a, a] including both endpoints."""
    if points < 9:
        raise DomainError("a profile grid needs at least 9 points")
    grid = np.linspace(-a, a, points)
    # exact mirror symmetry keeps shape reports invariant under x -> -x
    half = points // 2
    grid[points - half:] = -grid[:half][::-1]
    if points % 2:
        grid[half] = 0.0
    return grid


@dataclass
class Profile:
    """Function values on a uniform 1-d grid.

    ``meta`` records which operation produced the values and with what
    parameters; ``noise`` is an estimate of the absolute numerical error
    in ``values`` used to flag inconclusive shape verdicts.
    """

    grid: np.ndarray
    values: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)
    noise: float = 0.0

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or self.grid.size < 9:
            raise DomainError("a profile grid needs at least 9 points")
        if self.values.shape != self.grid.shape:
            raise DomainError("values and grid differ in shape")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("profile values must be finite")
        steps = np.diff(self.grid)
        if not np.all(steps > 0):
            raise DomainError("grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise DomainError("grid must be uniform")

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def half_width(self) -> float:
        return float(max(-self.grid[0], self.grid[-1]))

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        return bool(np.allclose(self.grid, -self.grid[::-1], rtol=0.0,
                                atol=rtol * self.half_width))

    def mirrored(self) -> "Profile":
        """The profile of ``x -> f(-x)`` on the same (symmetric) grid."""
        return Profile(self.grid.copy(), self.values[::-1].copy(), dict(self.meta), self.noise)

    def at(self, x: float) -> float:
        return float(np.interp(x, self.grid, self.values))


@dataclass
class Profile2D:
    """Values on a tensor grid; nodes outside the domain are masked out."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    mask: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.x.size, self.y.size):
            raise DomainError("values must have shape (len(x), len(y))")
        if self.mask is None:
            self.mask = np.ones(self.values.shape, dtype=bool)

    def row(self, j: int) -> Profile:
        """Profile along x at fixed ``y[j]``, restricted to the domain."""
        keep = self.mask[:, j]
        return Profile(self.x[keep], self.values[keep, j], dict(self.meta, axis=0, y=float(self.y[j])))

    def column(self, i: int) -> Profile:
        keep = self.mask[i, :]
        return Profile(self.y[keep], self.values[i, keep], dict(self.meta, axis=1, x=float(self.x[i])))


def as_durations(durations: Sequence[float]) -> list[float]:
    ds = [float(t) for t in durations]
    if not ds:
        raise DomainError("durations must be non-empty")
    if any(not t > 0.0 for t in ds):
        raise DomainError("durations must be positive")
    return ds
