"""Exact canonical labelling of small undirected graphs.

Individualization-refinement search: equitable colour refinement at each
node of the search tree, branching on the first smallest non-singleton cell,
with pruning by automorphisms discovered between leaves.  The canonical form
is the lexicographically largest relabelled edge list over all leaves.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .errors import TooLarge

DEFAULT_LIMIT = 64

CanonicalKey = tuple


def _refine(partition: list[list[int]], adj: Sequence[frozenset[int]]) -> list[list[int]]:
    # Splits cells until every cell is equitable with respect to every other cell.
    # Cell order depends only on neighbour counts, so the result is label invariant.
    cells = [list(c) for c in partition]
    changed = True
    while changed:
        changed = False
        for s_idx in range(len(cells)):
            splitter = set(cells[s_idx])
            new_cells: list[list[int]] = []
            for cell in cells:
                if len(cell) == 1:
                    new_cells.append(cell)
                    continue
                counts: dict[int, list[int]] = {}
                for v in cell:
                    counts.setdefault(len(adj[v] & splitter), []).append(v)
                if len(counts) == 1:
                    new_cells.append(cell)
                else:
                    changed = True
                    for c in sorted(counts):
                        new_cells.append(counts[c])
            cells = new_cells
            if changed:
                break
    return cells


def _certificate(order: Sequence[int], edges: Iterable[tuple[int, int]]) -> tuple:
    pos = {v: i for i, v in enumerate(order)}
    return tuple(sorted(tuple(sorted((pos[u], pos[v]))) for u, v in edges))


class _Orbits:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def canonical_form(n: int, edges: Iterable[tuple[int, int]], limit: int = DEFAULT_LIMIT) -> CanonicalKey:
    """Return ``(n, edges)`` relabelled canonically.

    Two graphs receive equal keys exactly when they are isomorphic.
    """
    if n > limit:
        raise TooLarge(f"graph with {n} vertices exceeds canonicalization limit {limit}")
    edge_list = [(int(u), int(v)) for u, v in edges]
    adj_sets: list[set[int]] = [set() for _ in range(n)]
    for u, v in edge_list:
        adj_sets[u].add(v)
        adj_sets[v].add(u)
    adj = [frozenset(s) for s in adj_sets]
    if n == 0:
        return (0, ())

    best: list = [None, None]  # certificate, leaf order
    first: list = [None, None, None]  # certificate, leaf order, path
    automorphisms: list[list[int]] = []

    def record(a: list[int], b: list[int]) -> None:
        gamma = [0] * n
        for x, y in zip(a, b):
            gamma[x] = y
        if any(gamma[i] != i for i in range(n)):
            automorphisms.append(gamma)

    def leaf(order: list[int], path: list[int]) -> int | None:
        cert = _certificate(order, edge_list)
        if first[0] is None:
            first[0], first[1], first[2] = cert, order, list(path)
        elif cert == first[0]:
            record(order, first[1])
            # the subtree below the divergence point is an image of the first one
            common = 0
            while common < len(path) and path[common] == first[2][common]:
                common += 1
            return common
        if best[0] is None or cert > best[0]:
            best[0], best[1] = cert, order
        elif cert == best[0]:
            record(order, best[1])
        return None

    def search(cells: list[list[int]], prefix: list[int]) -> int | None:
        cells = _refine(cells, adj)
        if len(cells) == n:
            return leaf([c[0] for c in cells], prefix)
        target_idx = min(
            (i for i, c in enumerate(cells) if len(c) > 1),
            key=lambda i: (len(cells[i]), i),
        )
        target = cells[target_idx]
        explored: list[int] = []
        depth = len(prefix)
        for v in sorted(target):
            if explored:
                orbits = _Orbits(n)
                for gamma in automorphisms:
                    if all(gamma[x] == x for x in prefix):
                        for x in range(n):
                            orbits.union(x, gamma[x])
                rv = orbits.find(v)
                if any(orbits.find(w) == rv for w in explored):
                    continue
            rest = [w for w in target if w != v]
            child = cells[:target_idx] + [[v], rest] + cells[target_idx + 1:]
            jump = search(child, prefix + [v])
            explored.append(v)
            if jump is not None and jump < depth:
                return jump
        return None

    # initial partition by degree, ordered by degree
    by_degree: dict[int, list[int]] = {}
    for v in range(n):
        by_degree.setdefault(len(adj[v]), []).append(v)
    search([by_degree[d] for d in sorted(by_degree)], [])
    return (n, best[0])
