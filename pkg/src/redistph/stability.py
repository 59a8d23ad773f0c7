"""Stability of diagrams under vote changes and small geographic perturbations."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .chains import ChainConfig, flip_step, recom_step
from .errors import NotGraphPreserving, NotOneWay
from .graph_core import DistrictGraph, DualGraph, Election, Plan, district_graph
from .metrics import bottleneck
from .persistence import plan_diagram, sublevel_diagram

SLACK = 1e-12


@dataclass
class PerturbationClass:
    """How plan B differs from plan A after re-indexing B's districts.

    ``mapping[i]`` is the district of B identified with district ``i`` of A.
    For a one-way perturbation ``moved`` holds the units leaving A's district
    ``pair[0]`` for ``pair[1]``; for a general one ``moved_back`` holds the
    units going the other way.
    """

    kind: str  # "one_way" | "general" | "not_a_perturbation"
    pair: tuple[int, int] | None
    moved: list[int] = field(default_factory=list)
    moved_back: list[int] = field(default_factory=list)
    graph_preserving: bool = False
    mapping: list[int] = field(default_factory=list)


def match_districts(g: DualGraph, a: Plan, b: Plan) -> list[int]:
    """Re-index B onto A by maximising shared population (ties by shared unit count)."""
    k = a.k
    weight = g.population.astype(np.int64) * (g.n_nodes + 1) + 1
    overlap = np.zeros((k, k), dtype=np.int64)
    np.add.at(overlap, (a.labels, b.labels), weight)
    rows, cols = linear_sum_assignment(overlap, maximize=True)
    mapping = [0] * k
    for r, c in zip(rows, cols):
        mapping[int(r)] = int(c)
    return mapping


def _graph_preserving(dga: DistrictGraph, dgb: DistrictGraph, mapping: Sequence[int]) -> bool:
    image = {tuple(sorted((mapping[i], mapping[j]))) for i, j in dga.edges}
    return image == set(dgb.edges)


def classify_perturbation(plan_a: Plan, plan_b: Plan, g: DualGraph) -> PerturbationClass:
    if plan_a.k != plan_b.k:
        return PerturbationClass("not_a_perturbation", None)
    mapping = match_districts(g, plan_a, plan_b)
    inverse = np.empty(plan_a.k, dtype=np.int64)
    inverse[mapping] = np.arange(plan_a.k)
    b_in_a = inverse[plan_b.labels]  # B's labels expressed in A's indexing
    changed = np.flatnonzero(plan_a.labels != b_in_a)
    preserving = _graph_preserving(district_graph(g, plan_a), district_graph(g, plan_b), mapping)
    if changed.size == 0:
        return PerturbationClass("one_way", None, [], [], preserving, mapping)
    touched = sorted(set(plan_a.labels[changed].tolist()) | set(b_in_a[changed].tolist()))
    if len(touched) != 2:
        return PerturbationClass("not_a_perturbation", None, graph_preserving=preserving, mapping=mapping)
    i, j = touched
    forward = [int(v) for v in changed if plan_a.labels[v] == i]
    backward = [int(v) for v in changed if plan_a.labels[v] == j]
    if forward and backward:
        return PerturbationClass("general", (i, j), forward, backward, preserving, mapping)
    if not forward:
        i, j = j, i
        forward = backward
    return PerturbationClass("one_way", (i, j), forward, [], preserving, mapping)


@dataclass
class BoundReport:
    theoretical_bound: float
    observed_bottleneck: float
    alpha: float | None
    epsilon: float | None
    satisfied: bool
    detail: dict = field(default_factory=dict)


def _report(bound, observed, alpha=None, epsilon=None, **detail) -> BoundReport:
    return BoundReport(float(bound), float(observed), alpha, epsilon, observed <= bound + SLACK, detail)


def vote_stability_check(dg: DistrictGraph, f: Sequence[float], g: Sequence[float]) -> BoundReport:
    """Bottleneck distance of two filtrations of one district graph vs their sup-norm gap."""
    df = sublevel_diagram(dg.k, dg.edges, f)
    dgg = sublevel_diagram(dg.k, dg.edges, g)
    gap = float(np.max(np.abs(np.asarray(f, dtype=float) - np.asarray(g, dtype=float)))) if dg.k else 0.0
    return _report(gap, bottleneck(df, dgg).cost)


def geo_coefficient(epsilon: float, alpha: float) -> float:
    """Proportionality constant ``2 eps / (alpha (1 - eps))`` of the geographic bound."""
    return 2 * epsilon / (alpha * (1 - epsilon))


def geo_stability_bound(
    plan_a: Plan,
    plan_b: Plan,
    g: DualGraph,
    election: Election,
    epsilon: float | None = None,
    alpha: float | None = None,
    perturbation: PerturbationClass | None = None,
) -> BoundReport:
    """Check the bottleneck bound for a graph-preserving one-way perturbation.

    ``alpha`` defaults to the smallest turnout ratio (two-party votes over
    population) among the two affected districts before and after the move.
    """
    eps = plan_a.epsilon if epsilon is None else epsilon
    pc = perturbation or classify_perturbation(plan_a, plan_b, g)
    if pc.kind != "one_way":
        raise NotOneWay(f"perturbation kind is {pc.kind}")
    if not pc.graph_preserving:
        raise NotGraphPreserving("district adjacency changes under the perturbation")
    observed = bottleneck(plan_diagram(g, plan_a, election), plan_diagram(g, plan_b, election)).cost
    if pc.pair is None:
        return _report(0.0, observed, alpha, eps)

    r = g.attribute(election.republican)
    votes = r + g.attribute(election.democratic)
    i, j = pc.pair
    moved = np.array(pc.moved)
    a_i = plan_a.members(i)
    a_j = plan_a.members(j)
    b_i = np.setdiff1d(a_i, moved)
    b_j = np.union1d(a_j, moved)

    if alpha is None:
        alpha = min(float(votes[w].sum()) / float(g.population[w].sum()) for w in (a_i, a_j, b_i, b_j))

    def share(w):
        return float(r[w].sum()) / float(votes[w].sum())

    moved_votes = float(votes[moved].sum())
    if moved_votes == 0:
        numerator = 0.0
    else:
        fv = share(moved)
        numerator = max(abs(fv - share(a_i)), abs(fv - share(a_j)))
    coef = geo_coefficient(eps, alpha)
    return _report(coef * numerator, observed, alpha, eps, coefficient=coef, share_gap=numerator, moved=len(moved))


def flip_trace(
    g: DualGraph, start: Plan, election: Election, n_steps: int, rng: random.Random
) -> list[tuple[int, float]]:
    """Bottleneck distance to ``start`` after each of ``n_steps`` flip steps."""
    base = plan_diagram(g, start, election)
    plan = start
    out = []
    for step in range(1, n_steps + 1):
        plan = flip_step(g, plan, rng)
        out.append((step, bottleneck(base, plan_diagram(g, plan, election)).cost))
    return out


def recom_preservation_rate(g: DualGraph, start: Plan, n_steps: int, cfg: ChainConfig, rng: random.Random | None = None):
    """Fraction of recombination steps that keep the district graph (``None`` if no step moved)."""
    rng = rng or random.Random(cfg.rng_seed)
    plan = start
    moved = preserved = 0
    for _ in range(n_steps):
        nxt = recom_step(g, plan, rng, cfg)
        pc = classify_perturbation(plan, nxt, g)
        # a relabelled copy of the same partition is not a move
        if pc.pair is not None or pc.kind != "one_way":
            moved += 1
            preserved += pc.graph_preserving
        plan = nxt
    return preserved / moved if moved else None


def mean_pairwise_bottleneck(diagrams) -> float:
    pairs = list(itertools.combinations(range(len(diagrams)), 2))
    if not pairs:
        return 0.0
    return float(np.mean([bottleneck(diagrams[a], diagrams[b]).cost for a, b in pairs]))
