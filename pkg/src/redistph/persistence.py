"""Degree-0 persistence of vertex-filtered graphs (union-find, Elder Rule)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .errors import Disconnected, FiltrationRangeError, MissingFiltration
from .graph_core import DistrictGraph, DualGraph, Election, Plan, district_graph, republican_share

INF = math.inf


class DiagramPoint(NamedTuple):
    birth: float
    death: float
    anchor: int | None = None

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass(frozen=True)
class Diagram:
    """Multiset of (birth, death) points; infinite death is ``math.inf``.

    ``ties`` records whether equal filtration values had to be ordered by
    district index.
    """

    points: tuple[DiagramPoint, ...]
    k: int | None = field(default=None, compare=False)
    ties: bool = field(default=False, compare=False)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def finite(self) -> list[DiagramPoint]:
        return [p for p in self.points if p.death != INF]

    @property
    def infinite(self) -> list[DiagramPoint]:
        return [p for p in self.points if p.death == INF]

    def pairs(self) -> list[tuple[float, float]]:
        return [(p.birth, p.death) for p in self.points]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]], k: int | None = None) -> "Diagram":
        pts = []
        for pair in pairs:
            anchor = int(pair[2]) if len(pair) > 2 and pair[2] is not None else None
            pts.append(DiagramPoint(float(pair[0]), float(pair[1]), anchor))
        return cls(tuple(sorted(pts, key=_point_key)), k)


def _point_key(p: DiagramPoint):
    return (p.birth, p.death, -1 if p.anchor is None else p.anchor)


def filtration_order(dg: DistrictGraph) -> tuple[list[int], bool]:
    """Districts sorted by filtration value, ties broken by index.

    Returns the order and a flag telling whether any tie occurred.
    """
    if dg.filtration is None or len(dg.filtration) != dg.k:
        raise MissingFiltration("district graph has no filtration values")
    return _order(dg.filtration)


def _order(values) -> tuple[list[int], bool]:
    values = [float(x) for x in values]
    for i, x in enumerate(values):
        if not 0.0 <= x <= 1.0:
            raise FiltrationRangeError(f"filtration value {x} of district {i} outside [0, 1]")
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    ties = len(set(values)) < len(values)
    return order, ties


def sublevel_diagram(k: int, edges: Iterable[tuple[int, int]], values: Sequence[float]) -> Diagram:
    """Degree-0 diagram of a graph on ``0..k-1`` under vertex filtration ``values``."""
    order, ties = _order(values)
    nbrs: list[list[int]] = [[] for _ in range(k)]
    for i, j in edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    rank = [0] * k
    for r, v in enumerate(order):
        rank[v] = r

    parent = list(range(k))

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    points: list[DiagramPoint] = []
    for r, v in enumerate(order):
        t = float(values[v])
        for u in nbrs[v]:
            if rank[u] > r:
                continue
            ru, rv = find(u), find(v)
            if ru == rv:
                continue
            # roots are the component minima, so the larger rank is the younger one
            young, old = (ru, rv) if rank[ru] > rank[rv] else (rv, ru)
            parent[young] = old
            points.append(DiagramPoint(float(values[young]), t, young))
    roots = {find(v) for v in range(k)}
    if len(roots) > 1:
        raise Disconnected(f"filtered graph has {len(roots)} components")
    for root in roots:
        points.append(DiagramPoint(float(values[root]), INF, root))
    # components that die at their own birth value are diagonal and dropped
    points = [p for p in points if p.birth != p.death]
    return Diagram(tuple(sorted(points, key=_point_key)), k, ties)


def persistence_diagram(dg: DistrictGraph) -> Diagram:
    if dg.filtration is None:
        raise MissingFiltration("district graph has no filtration values")
    return sublevel_diagram(dg.k, dg.edges, dg.filtration)


def nw_quadrant(d: Diagram, threshold: float = 0.5) -> list[DiagramPoint]:
    """Points born below ``threshold`` that die above it."""
    return [p for p in d.points if p.birth < threshold and p.death > threshold]


def plan_diagram(g: DualGraph, plan: Plan, election: Election) -> Diagram:
    """Diagram of ``plan`` filtered by Republican share in ``election``."""
    return persistence_diagram(republican_share(district_graph(g, plan), election))
