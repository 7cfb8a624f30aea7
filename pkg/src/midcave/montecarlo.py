"""Monte Carlo estimates for subordinated Brownian paths observed at
discrete times.

``X_t = B_{2 sigma_t}`` with ``sigma`` the one-sided stable subordinator of
index ``alpha / 2``.  Batch ``b`` always draws from the stream
``SeedSequence(seed, spawn_key=(b,))`` and batch counts are merged in batch
order, so results do not depend on how many threads run the batches.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .domain import Box, TimeGrid
from .errors import ConfigError, DomainError
from .kernels import _log_kanter, check_alpha, check_index

MIN_SAMPLES = 1000


@dataclass(frozen=True)
class MCConfig:
    seed: int = 0
    samples: int = 100_000
    batches: int = 10

    def __post_init__(self):
        if int(self.samples) != self.samples or self.samples < MIN_SAMPLES:
            raise ConfigError(f"Monte Carlo needs at least {MIN_SAMPLES} samples, got {self.samples}")
        if int(self.batches) != self.batches or self.batches < 1:
            raise ConfigError("batches must be a positive integer")
        if self.samples % self.batches:
            raise ConfigError(f"batches ({self.batches}) must divide samples ({self.samples})")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def rng(self, batch: int) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(int(self.seed), spawn_key=(int(batch),))))


@dataclass
class MCEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int
    config: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _threads() -> int:
    raw = os.environ.get("MIDCAVE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"MIDCAVE_THREADS must be an integer, got {raw!r}")


def sample_subordinator_increment(index, dt, rng: np.random.Generator, size=None):
    """Increments of the ``index``-stable subordinator over time ``dt``.

    Kanter's representation: ``(A(U) / E)**((1-b)/b) * dt**(1/b)`` with
    ``U`` uniform on (0, pi) and ``E`` standard exponential.
    """
    index = check_index(index)
    dt = float(dt)
    if not dt > 0:
        raise DomainError("dt must be positive")
    u = math.pi * (1.0 - rng.random(size))  # (0, pi], avoids sin(0)
    e = np.maximum(rng.standard_exponential(size), 1e-300)
    log_s = ((1.0 - index) / index) * (_log_kanter(index, u) - np.log(e)) + np.log(dt) / index
    out = np.exp(log_s)
    return out if np.ndim(out) else float(out)


def _as_box(box) -> Box:
    return box if isinstance(box, Box) else Box(tuple(np.atleast_1d(box)))


def _run_batch(x, alpha, increments, halfwidths, record, n, rng):
    """Counts of paths still inside after each recorded step index."""
    d = x.size
    pos = np.tile(x, (n, 1))
    counts = np.zeros(len(record), dtype=np.int64)
    r = 0
    for k, dt in enumerate(increments):
        m = pos.shape[0]
        if m:
            if alpha < 2.0:
                var = 2.0 * sample_subordinator_increment(alpha / 2.0, dt, rng, m)
                pos += np.sqrt(var)[:, None] * rng.standard_normal((m, d))
            else:
                pos += math.sqrt(2.0 * dt) * rng.standard_normal((m, d))
            # dead paths are dropped; the stream stays deterministic
            pos = pos[np.all(np.abs(pos) < halfwidths, axis=1)]
        while r < len(record) and record[r] == k:
            counts[r] = pos.shape[0]
            r += 1
    return counts


def _simulate(x, alpha, increments, box, cfg: MCConfig, record):
    alpha = check_alpha(alpha)
    box = _as_box(box)
    x = box.check_inside(x)
    hw = np.asarray(box.halfwidths)
    per = cfg.samples // cfg.batches

    def job(b):
        return _run_batch(x, alpha, increments, hw, record, per, cfg.rng(b))

    threads = min(_threads(), cfg.batches)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(job, range(cfg.batches)))
    else:
        results = [job(b) for b in range(cfg.batches)]
    total = np.zeros(len(record), dtype=np.int64)
    for c in results:  # fixed merge order
        total += c
    return total


def _estimate(count, cfg: MCConfig) -> MCEstimate:
    n = cfg.samples
    p = count / n
    return MCEstimate(float(p), float(math.sqrt(p * (1.0 - p) / n)), n, int(cfg.seed), asdict(cfg))


def mc_fdd(x, alpha, times, box, cfg: MCConfig) -> MCEstimate:
    """``P_x{X_{t_1} in Q, ..., X_{t_n} in Q}`` by simulation."""
    times = times if isinstance(times, TimeGrid) else TimeGrid(tuple(np.atleast_1d(times)))
    incs = times.increments
    count = _simulate(x, alpha, incs, box, cfg, [len(incs) - 1])[0]
    return _estimate(count, cfg)


def mc_survival(x, alpha, t, box, m: int, cfg: MCConfig) -> MCEstimate:
    """Survival observed at the ``m`` times ``i t / m``."""
    if int(m) != m or m < 1:
        raise DomainError("need at least one observation")
    return mc_fdd(x, alpha, TimeGrid.equal(float(t), int(m)), box, cfg)


def mc_survival_curve(x, alpha, dt: float, steps, box, cfg: MCConfig) -> list[MCEstimate]:
    """Survival after each step count in ``steps`` from one set of paths."""
    steps = sorted(int(s) for s in steps)
    if steps[0] < 1:
        raise DomainError("need at least one observation")
    counts = _simulate(x, alpha, [float(dt)] * steps[-1], box, cfg, [s - 1 for s in steps])
    return [_estimate(c, cfg) for c in counts]


@dataclass
class MCDecay:
    """``-log(S(t2)/S(t1)) / (t2 - t1)`` with a delta-method standard error."""

    rate: float
    stderr: float
    t1: float
    t2: float
    dt: float
    survival: tuple[float, float]
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def mc_decay_rate(alpha, box, t1: float, t2: float, dt: float, cfg: MCConfig, x=None) -> MCDecay:
    box = _as_box(box)
    x = np.zeros(box.dim) if x is None else x
    m1, m2 = round(t1 / dt), round(t2 / dt)
    if not m2 > m1 >= 1:
        raise DomainError("need t2 > t1 >= dt")
    s1, s2 = mc_survival_curve(x, alpha, dt, [m1, m2], box, cfg)
    if s2.mean == 0.0:
        raise DomainError("no path survived to t2; use more samples or smaller times")
    n = cfg.samples
    span = (m2 - m1) * dt
    # the same paths give Cov(log S1, log S2) = (1 - S1) / (n S1)
    var = ((1.0 - s2.mean) / (n * s2.mean) - (1.0 - s1.mean) / (n * s1.mean)) / span ** 2
    rate = -math.log(s2.mean / s1.mean) / span
    return MCDecay(rate, math.sqrt(max(var, 0.0)), m1 * dt, m2 * dt, float(dt),
                   (s1.mean, s2.mean), n, int(cfg.seed))
