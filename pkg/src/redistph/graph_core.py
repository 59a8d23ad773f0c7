"""Unit dual graphs, districting plans and district dual graphs."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import canon
from .errors import (
    Disconnected,
    DistrictDisconnected,
    DuplicateEdge,
    DuplicateNode,
    MissingNode,
    NegativeAttribute,
    PlanError,
    PopulationImbalance,
    SelfLoop,
    TooLarge,
    UnknownEdgeEndpoint,
    ZeroTurnoutDistrict,
)


@dataclass(frozen=True)
class NodeRecord:
    id: str
    population: int
    attributes: Mapping[str, float] = field(default_factory=dict)


class Election(NamedTuple):
    """Names the two vote attributes that make up one election."""

    name: str
    republican: str
    democratic: str


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _connected(nodes: Iterable[int], neighbors: Sequence[Sequence[int]]) -> bool:
    nodes = set(nodes)
    if not nodes:
        return False
    start = next(iter(nodes))
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in neighbors[u]:
            if w in nodes and w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(nodes)


class DualGraph:
    """Validated unit adjacency graph; build with :func:`build_dual_graph`.

    Nodes are addressed internally by position ``0..n-1``; ``ids`` maps
    positions back to the opaque string ids of the input.
    """

    def __init__(self, ids, population, attributes, edges):
        self.ids: tuple[str, ...] = tuple(ids)
        self.index: dict[str, int] = {v: i for i, v in enumerate(self.ids)}
        self.population: np.ndarray = _readonly(np.asarray(population, dtype=np.int64))
        self.attributes: dict[str, np.ndarray] = {
            k: _readonly(np.asarray(v, dtype=float)) for k, v in attributes.items()
        }
        self.edges: tuple[tuple[int, int], ...] = tuple(edges)
        nbrs: list[list[int]] = [[] for _ in self.ids]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        self.neighbors: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(n)) for n in nbrs)
        self.total_population = int(self.population.sum())

    @property
    def n_nodes(self) -> int:
        return len(self.ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def nodes(self) -> list[NodeRecord]:
        return [
            NodeRecord(v, int(self.population[i]), {a: float(x[i]) for a, x in self.attributes.items()})
            for i, v in enumerate(self.ids)
        ]

    def attribute(self, name: str) -> np.ndarray:
        try:
            return self.attributes[name]
        except KeyError:
            raise KeyError(f"unknown attribute {name!r}") from None

    def __repr__(self) -> str:
        return f"DualGraph(|V|={self.n_nodes}, |E|={self.n_edges})"


def build_dual_graph(nodes: Sequence[NodeRecord], edges: Iterable[Sequence[str]]) -> DualGraph:
    """Validate node records and id-pair edges into a :class:`DualGraph`.

    Attributes missing on some nodes are treated as zero for those nodes.
    """
    ids: list[str] = []
    seen: set[str] = set()
    for rec in nodes:
        if rec.id in seen:
            raise DuplicateNode(f"duplicate node id {rec.id!r}")
        seen.add(rec.id)
        ids.append(rec.id)
        if rec.population < 0 or int(rec.population) != rec.population:
            raise NegativeAttribute(f"node {rec.id!r}: population must be a nonnegative integer")
        for name, value in rec.attributes.items():
            if not value >= 0:
                raise NegativeAttribute(f"node {rec.id!r}: attribute {name!r} = {value}")
    index = {v: i for i, v in enumerate(ids)}
    names = sorted({a for rec in nodes for a in rec.attributes})
    attributes = {a: [float(rec.attributes.get(a, 0.0)) for rec in nodes] for a in names}
    population = [int(rec.population) for rec in nodes]

    edge_list: list[tuple[int, int]] = []
    edge_set: set[tuple[int, int]] = set()
    for pair in edges:
        a, b = pair
        if a not in index or b not in index:
            raise UnknownEdgeEndpoint(f"edge ({a!r}, {b!r}) references an unknown node")
        if a == b:
            raise SelfLoop(f"self-loop at {a!r}")
        u, v = sorted((index[a], index[b]))
        if (u, v) in edge_set:
            raise DuplicateEdge(f"duplicate edge ({a!r}, {b!r})")
        edge_set.add((u, v))
        edge_list.append((u, v))

    g = DualGraph(ids, population, attributes, edge_list)
    if g.n_nodes and not _connected(range(g.n_nodes), g.neighbors):
        raise Disconnected("unit dual graph is not connected")
    return g


def population_bounds(total: int, k: int, epsilon: float) -> tuple[int, int]:
    """Integer population range ``[lo, hi]`` allowed for each of ``k`` districts."""
    ideal = Fraction(int(total), k)
    eps = Fraction(epsilon)
    return math.ceil((1 - eps) * ideal), math.floor((1 + eps) * ideal)


@dataclass(frozen=True, eq=False)
class Plan:
    """A valid districting plan.  ``labels[v]`` is the district of node position ``v``."""

    labels: np.ndarray
    k: int
    epsilon: float
    ideal_size: float
    district_population: np.ndarray
    node_ids: tuple[str, ...]

    @property
    def assignment(self) -> dict[str, int]:
        return {v: int(d) for v, d in zip(self.node_ids, self.labels)}

    def members(self, district: int) -> np.ndarray:
        return np.flatnonzero(self.labels == district)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Plan):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    def __hash__(self) -> int:
        return hash((self.k, self.labels.tobytes()))

    def __repr__(self) -> str:
        return f"Plan(k={self.k}, epsilon={self.epsilon}, n={len(self.labels)})"


def _plan_unchecked(g: DualGraph, labels, k: int, epsilon: float) -> Plan:
    labels = _readonly(np.array(labels, dtype=np.int64))
    pops = np.zeros(k, dtype=np.int64)
    np.add.at(pops, labels, g.population)
    return Plan(labels, k, float(epsilon), g.total_population / k, _readonly(pops), g.ids)


def validate_plan(g: DualGraph, assignment, k: int, epsilon: float) -> Plan:
    """Check contiguity and balance of ``assignment`` and return a :class:`Plan`.

    ``assignment`` is either a mapping ``node id -> district`` or a sequence of
    districts indexed by node position.
    """
    if k < 2:
        raise PlanError(f"k must be at least 2, got {k}")
    if not 0 < epsilon < 1:
        raise PlanError(f"epsilon must lie in (0, 1), got {epsilon}")
    if isinstance(assignment, Mapping):
        for key in assignment:
            if key not in g.index:
                raise PlanError(f"assignment references unknown node {key!r}")
        missing = [v for v in g.ids if v not in assignment]
        if missing:
            raise MissingNode(f"{len(missing)} nodes unassigned, e.g. {missing[0]!r}")
        labels = np.array([int(assignment[v]) for v in g.ids], dtype=np.int64)
    else:
        labels = np.asarray(assignment, dtype=np.int64)
        if labels.shape != (g.n_nodes,):
            raise MissingNode(f"assignment has {labels.size} entries for {g.n_nodes} nodes")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise PlanError(f"district indices must lie in 0..{k - 1}")

    for i in range(k):
        if not _connected(np.flatnonzero(labels == i).tolist(), g.neighbors):
            raise DistrictDisconnected(i)
    plan = _plan_unchecked(g, labels, k, epsilon)
    lo, hi = population_bounds(g.total_population, k, epsilon)
    for i, p in enumerate(plan.district_population):
        if not lo <= p <= hi:
            raise PopulationImbalance(i, float(p) / plan.ideal_size)
    return plan


@dataclass(frozen=True)
class DistrictGraph:
    """Quotient of the unit graph by a plan, with per-district sums."""

    k: int
    edges: frozenset
    population: np.ndarray
    attributes: dict
    filtration: np.ndarray | None = None

    def neighbors(self) -> list[list[int]]:
        nbrs: list[list[int]] = [[] for _ in range(self.k)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return [sorted(n) for n in nbrs]

    def with_filtration(self, values) -> "DistrictGraph":
        return replace(self, filtration=_readonly(np.array(values, dtype=float)))


def district_graph(g: DualGraph, plan: Plan) -> DistrictGraph:
    labels = plan.labels
    edges = set()
    for u, v in g.edges:
        a, b = labels[u], labels[v]
        if a != b:
            edges.add((int(min(a, b)), int(max(a, b))))
    attrs = {
        name: _readonly(np.bincount(labels, weights=values, minlength=plan.k))
        for name, values in g.attributes.items()
    }
    return DistrictGraph(plan.k, frozenset(edges), plan.district_population, attrs)


def vote_share(dg: DistrictGraph, numerator: str, other: str) -> np.ndarray:
    """Two-party share ``numerator / (numerator + other)`` per district."""
    a = dg.attributes[numerator]
    b = dg.attributes[other]
    total = a + b
    for i, t in enumerate(total):
        if t <= 0:
            raise ZeroTurnoutDistrict(i)
    return a / total


def republican_share(dg: DistrictGraph, election: Election | Sequence[str]) -> DistrictGraph:
    """Return ``dg`` filtered by Republican two-party share for ``election``."""
    election = _as_election(election)
    return dg.with_filtration(vote_share(dg, election.republican, election.democratic))


def _as_election(election) -> Election:
    if isinstance(election, Election):
        return election
    if len(election) == 3:
        return Election(*election)
    r, d = election
    return Election(f"{r}/{d}", r, d)


def statewide_share(g: DualGraph, election: Election | Sequence[str]) -> float:
    election = _as_election(election)
    r = float(g.attribute(election.republican).sum())
    d = float(g.attribute(election.democratic).sum())
    return r / (r + d)


def canonical_class(dg: DistrictGraph, limit: int = canon.DEFAULT_LIMIT) -> canon.CanonicalKey:
    """Isomorphism-class key of the district graph (raises TooLarge past ``limit``)."""
    return canon.canonical_form(dg.k, dg.edges, limit=limit)


def isomorphism_variety(dgs: Sequence[DistrictGraph], limit: int = canon.DEFAULT_LIMIT) -> dict:
    classes = set()
    unclassified = 0
    for dg in dgs:
        try:
            classes.add(canonical_class(dg, limit))
        except TooLarge:
            unclassified += 1
    return {"graphs": len(dgs), "distinct_classes": len(classes), "unclassified": unclassified}


def _eccentricities(k: int, nbrs: list[list[int]]) -> list[int]:
    out = []
    for s in range(k):
        dist = {s: 0}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in nbrs[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        out.append(max(dist.values()) if len(dist) == k else math.inf)
    return out


@dataclass
class GraphStatistics:
    diameter: np.ndarray
    max_degree: np.ndarray
    mean_degree: np.ndarray
    density: np.ndarray
    histograms: dict


def graph_statistics(dgs: Sequence[DistrictGraph], bins: int = 10) -> GraphStatistics:
    if not dgs:
        raise ValueError("graph_statistics needs at least one graph")
    diam, maxdeg, meandeg, dens = [], [], [], []
    for dg in dgs:
        nbrs = dg.neighbors()
        degrees = [len(n) for n in nbrs]
        diam.append(max(_eccentricities(dg.k, nbrs)) if dg.k > 1 else 0)
        maxdeg.append(max(degrees))
        meandeg.append(2 * len(dg.edges) / dg.k)
        pairs = dg.k * (dg.k - 1) / 2
        dens.append(len(dg.edges) / pairs if pairs else 0.0)
    stats = GraphStatistics(
        np.array(diam, dtype=float), np.array(maxdeg), np.array(meandeg), np.array(dens), {}
    )
    for name in ("diameter", "max_degree", "mean_degree", "density"):
        counts, edges = np.histogram(getattr(stats, name), bins=bins)
        stats.histograms[name] = (counts, edges)
    return stats
