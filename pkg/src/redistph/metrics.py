"""Wasserstein and bottleneck distances between persistence diagrams.

Points with infinite death are matched only among themselves, at the
distance between their births.  Finite points are matched on the usual
augmented assignment problem where any point may instead retire to the
diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import InfiniteDeath
from .persistence import INF, Diagram

_BIG = 1e18


@dataclass
class Matching:
    """Optimal partial bijection between two diagrams.

    Indices refer to positions in ``Diagram.points``.  ``cost`` is the
    Wasserstein ``p``-cost (for ``p = inf``, the bottleneck cost).
    """

    pairs: list[tuple[int, int]]
    unmatched1: list[int]
    unmatched2: list[int]
    cost: float
    p: float
    infinite_mismatch: bool = False
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "pairs": [list(x) for x in self.pairs],
            "unmatched1": list(self.unmatched1),
            "unmatched2": list(self.unmatched2),
            "cost": self.cost,
            "p": "inf" if self.p == INF else self.p,
            "infinite_mismatch": self.infinite_mismatch,
        }


def diagonal_distance(point, p: float = 2.0) -> float:
    """l_p distance from (birth, death) to the nearest diagonal point."""
    b, d = point[0], point[1]
    if d == INF:
        raise InfiniteDeath("a point with infinite death has no diagonal projection")
    return abs(d - b) * _diagonal_scale(p)


def _diagonal_scale(p: float) -> float:
    # nearest diagonal point is the midpoint for every l_p, p >= 1
    if p == INF:
        return 0.5
    return 0.5 * 2.0 ** (1.0 / p)


def diagonal_projection(point) -> tuple[float, float]:
    m = (point[0] + point[1]) / 2.0
    return (m, m)


def point_distance(x, y, p: float = 2.0) -> float:
    """l_p distance between two points; infinite deaths compare births only."""
    db = abs(x[0] - y[0])
    if x[1] == INF or y[1] == INF:
        if x[1] != y[1]:
            return INF
        return db
    dd = abs(x[1] - y[1])
    if p == INF:
        return max(db, dd)
    if p == 2:
        return math.hypot(db, dd)
    return (db**p + dd**p) ** (1.0 / p)


def _split(d: Diagram):
    fin = [i for i, q in enumerate(d.points) if q.death != INF]
    inf = [i for i, q in enumerate(d.points) if q.death == INF]
    return fin, inf


def _pair_infinite(d1: Diagram, d2: Diagram, i1, i2, p):
    """Match infinite points by births; returns pairs and the leftovers."""
    if not i1 or not i2:
        return [], list(i1), list(i2)
    c = np.array([[abs(d1.points[a].birth - d2.points[b].birth) for b in i2] for a in i1])
    if p == INF and len(i1) == len(i2):
        rows, cols = _bottleneck_assignment(c)
    else:
        rows, cols = linear_sum_assignment(c if p == INF else c**p)
    pairs = [(i1[r], i2[s]) for r, s in zip(rows, cols)]
    used1 = {a for a, _ in pairs}
    used2 = {b for _, b in pairs}
    return pairs, [a for a in i1 if a not in used1], [b for b in i2 if b not in used2]


def _augmented(d1: Diagram, d2: Diagram, f1, f2, p):
    """(n+m) x (n+m) cost matrix of raw l_p distances, with ``inf`` where disallowed."""
    n, m = len(f1), len(f2)
    x = np.array([d1.points[a][:2] for a in f1], dtype=float).reshape(n, 2)
    y = np.array([d2.points[b][:2] for b in f2], dtype=float).reshape(m, 2)
    db = np.abs(x[:, None, 0] - y[None, :, 0])
    dd = np.abs(x[:, None, 1] - y[None, :, 1])
    if p == INF:
        block = np.maximum(db, dd)
    elif p == 2:
        block = np.hypot(db, dd)
    else:
        block = (db**p + dd**p) ** (1.0 / p)
    scale = _diagonal_scale(p)
    c = np.full((n + m, n + m), INF)
    c[:n, :m] = block
    idx1, idx2 = np.arange(n), np.arange(m)
    c[idx1, m + idx1] = np.abs(x[:, 1] - x[:, 0]) * scale
    c[n + idx2, idx2] = np.abs(y[:, 1] - y[:, 0]) * scale
    c[n:, m:] = 0.0
    return c


def _decode(f1, f2, rows, cols):
    n, m = len(f1), len(f2)
    pairs, un1, un2 = [], [], []
    for r, s in zip(rows, cols):
        if r < n and s < m:
            pairs.append((f1[r], f2[s]))
        elif r < n:
            un1.append(f1[r])
        elif s < m:
            un2.append(f2[s])
    return pairs, un1, un2


def _bottleneck_assignment(c: np.ndarray):
    """Perfect matching minimising the largest entry of square matrix ``c``."""
    size = c.shape[0]
    if size == 0:
        return np.array([], dtype=int), np.array([], dtype=int)
    candidates = np.unique(c[np.isfinite(c)])
    lo, hi = 0, len(candidates) - 1

    def feasible(threshold):
        graph = csr_matrix((c <= threshold).astype(np.int8))
        match = maximum_bipartite_matching(graph, perm_type="column")
        return match if np.all(match >= 0) else None

    best = feasible(candidates[hi])
    if best is None:
        raise ValueError("no perfect matching with finite cost")
    while lo < hi:
        mid = (lo + hi) // 2
        match = feasible(candidates[mid])
        if match is not None:
            hi, best = mid, match
        else:
            lo = mid + 1
    rows = np.arange(size)
    return rows, np.asarray(best)


def matching_cost(d1: Diagram, d2: Diagram, matching: Matching) -> float:
    """Recompute the p-cost of a partial bijection from its definition."""
    p = matching.p
    terms = [point_distance(d1.points[a], d2.points[b], p) for a, b in matching.pairs]
    for a in matching.unmatched1:
        q = d1.points[a]
        terms.append(INF if q.death == INF else diagonal_distance(q, p))
    for b in matching.unmatched2:
        q = d2.points[b]
        terms.append(INF if q.death == INF else diagonal_distance(q, p))
    if not terms:
        return 0.0
    if p == INF:
        return float(max(terms))
    top = max(terms)
    if top == INF or top == 0:
        return float(top)
    # scale by the largest term so tiny costs do not underflow to zero
    return float(top * sum((t / top) ** p for t in terms) ** (1.0 / p))


def wasserstein(d1: Diagram, d2: Diagram, p: float = 2.0) -> Matching:
    """Optimal ``p``-Wasserstein matching between two diagrams.

    When the diagrams have different numbers of infinite points the leftover
    infinite points stay unmatched, the cost is ``inf`` and
    ``infinite_mismatch`` is set.
    """
    if p == INF:
        return bottleneck(d1, d2)
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    f1, i1 = _split(d1)
    f2, i2 = _split(d2)
    ipairs, iun1, iun2 = _pair_infinite(d1, d2, i1, i2, p)

    c = _augmented(d1, d2, f1, f2, p)
    weights = np.where(np.isfinite(c), c**p, _BIG)
    rows, cols = linear_sum_assignment(weights)
    pairs, un1, un2 = _decode(f1, f2, rows, cols)

    match = Matching(ipairs + pairs, un1 + iun1, un2 + iun2, 0.0, p, bool(iun1 or iun2))
    match.cost = matching_cost(d1, d2, match)
    return match


def bottleneck(d1: Diagram, d2: Diagram) -> Matching:
    """Bottleneck (p = inf) matching by threshold search over candidate costs."""
    f1, i1 = _split(d1)
    f2, i2 = _split(d2)
    ipairs, iun1, iun2 = _pair_infinite(d1, d2, i1, i2, INF)
    c = _augmented(d1, d2, f1, f2, INF)
    rows, cols = _bottleneck_assignment(c)
    pairs, un1, un2 = _decode(f1, f2, rows, cols)
    match = Matching(ipairs + pairs, un1 + iun1, un2 + iun2, 0.0, INF, bool(iun1 or iun2))
    match.cost = matching_cost(d1, d2, match)
    return match


def distance(d1: Diagram, d2: Diagram, p: float = 2.0) -> float:
    return wasserstein(d1, d2, p).cost


def distance_matrix(diagrams, p: float = INF) -> np.ndarray:
    n = len(diagrams)
    out = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            out[a, b] = out[b, a] = distance(diagrams[a], diagrams[b], p)
    return out
