"""Slow reference implementations used only to check the package.

None of these import the code they check.
"""

import itertools
import math
import random

INF = math.inf


def random_connected_graph(rng: random.Random, k: int, extra: float = 0.3):
    """Random spanning tree plus each remaining edge with probability ``extra``."""
    edges = set()
    for v in range(1, k):
        u = rng.randrange(v)
        edges.add((u, v))
    for u, v in itertools.combinations(range(k), 2):
        if (u, v) not in edges and rng.random() < extra:
            edges.add((u, v))
    return sorted(edges)


def _components(vertices, edges):
    vertices = set(vertices)
    adj = {v: [] for v in vertices}
    for a, b in edges:
        if a in vertices and b in vertices:
            adj[a].append(b)
            adj[b].append(a)
    seen, comps = set(), []
    for s in sorted(vertices):
        if s in seen:
            continue
        comp, stack = {s}, [s]
        seen.add(s)
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    stack.append(w)
        comps.append(comp)
    return comps


def prefix_persistence(k, edges, values):
    """Diagram from the components of every sublevel prefix.

    Each component is named by its oldest vertex (smallest ``(value, index)``);
    a name that stops being the oldest of its component has died.
    Returns a sorted list of ``(birth, death, anchor)``.
    """
    key = lambda v: (values[v], v)  # noqa: E731
    order = sorted(range(k), key=key)
    alive = {}
    out = []
    for j in range(1, k + 1):
        prefix = order[:j]
        t = values[order[j - 1]]
        comps = _components(prefix, edges)
        oldest = {min(c, key=key) for c in comps}
        for name in list(alive):
            if name not in oldest:
                out.append((values[name], t, name))
                del alive[name]
        for name in oldest:
            alive.setdefault(name, True)
    for name in alive:
        out.append((values[name], INF, name))
    return sorted(p for p in out if p[0] != p[1])


def _lp(x, y, p):
    if x[1] == INF or y[1] == INF:
        return abs(x[0] - y[0]) if x[1] == y[1] else INF
    a, b = abs(x[0] - y[0]), abs(x[1] - y[1])
    if p == INF:
        return max(a, b)
    return (a**p + b**p) ** (1 / p)


def _to_diagonal(x, p):
    if x[1] == INF:
        return INF
    # distance to the closest point (m, m) with m the midpoint
    m = (x[0] + x[1]) / 2
    return _lp(x, (m, m), p)


def exhaustive_wasserstein(d1, d2, p):
    """Minimum over every partial bijection between two point lists.

    Each point of ``d1`` in turn either retires to the diagonal or takes any
    still unused point of ``d2``; leftover ``d2`` points retire at the leaf.
    """
    n, m = len(d1), len(d2)
    pair = [[_lp(a, b, p) for b in d2] for a in d1]
    diag1 = [_to_diagonal(a, p) for a in d1]
    diag2 = [_to_diagonal(b, p) for b in d2]
    if p == INF:
        combine = max
        unit = 0.0
    else:
        def combine(acc, t):
            return acc + t**p

        unit = 0.0
    best = [INF]

    def rec(i, used, acc):
        if i == n:
            total = acc
            for b in range(m):
                if not used >> b & 1:
                    total = combine(total, diag2[b])
            if p != INF:
                total = total ** (1 / p)
            best[0] = min(best[0], total)
            return
        rec(i + 1, used, combine(acc, diag1[i]))
        for b in range(m):
            if not used >> b & 1:
                rec(i + 1, used | 1 << b, combine(acc, pair[i][b]))

    rec(0, 0, unit)
    return best[0]


def isomorphic(n, e1, e2):
    """Permutation search for an isomorphism between two graphs on ``0..n-1``."""
    s1 = {frozenset(e) for e in e1}
    s2 = {frozenset(e) for e in e2}
    if len(s1) != len(s2):
        return False
    deg1 = sorted(sum(v in e for e in s1) for v in range(n))
    deg2 = sorted(sum(v in e for e in s2) for v in range(n))
    if deg1 != deg2:
        return False
    for perm in itertools.permutations(range(n)):
        if all(frozenset((perm[a], perm[b])) in s2 for a, b in s1):
            return True
    return False
