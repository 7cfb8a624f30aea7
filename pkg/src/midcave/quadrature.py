"""Composite Gauss-Legendre rules."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panels_rule(edges, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on consecutive panels.

    Parameters
    ----------
    edges : array_like
        Increasing panel boundaries.
    order : int
        Nodes per panel.
    """
    edges = np.asarray(edges, dtype=float)
    g, w = _leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (g + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def uniform_edges(a: float, b: float, max_width: float) -> np.ndarray:
    """Edges of the fewest equal panels on [a, b] no wider than `max_width`."""
    count = max(1, int(np.ceil((b - a) / max_width - 1e-12)))
    return np.linspace(a, b, count + 1)


def graded_edges(a: float, b: float, ratio: float = 0.15, levels: int = 20,
                 toward: str = "left") -> np.ndarray:
    """Edges of [a, b] refined geometrically toward one endpoint.

    Resolves endpoint singularities such as xi**alpha at xi = 0.
    """
    span = b - a
    frac = ratio ** np.arange(levels, 0, -1)
    if toward == "left":
        inner = a + span * frac
        return np.concatenate(([a], inner, [b]))
    inner = b - span * frac[::-1]
    return np.concatenate(([a], inner, [b]))


def composite_rule(a: float, b: float, max_width: float, order: int = 16):
    """Composite rule of equal panels on [a, b]."""
    return panels_rule(uniform_edges(a, b, max_width), order)
