"""Markov chains on districting plans: recombination, single-unit flips and
a Metropolis-weighted recombination chain favouring one party's safe seats.

All randomness comes from a caller supplied :class:`random.Random`, so a
chain is reproducible from its seed.
"""

from __future__ import annotations

import dataclasses
import math
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigError, DisconnectedSubset, NoValidFlip, StepExhausted
from .graph_core import (
    DistrictGraph,
    DualGraph,
    Plan,
    _connected,
    _plan_unchecked,
    population_bounds,
    vote_share,
)


@dataclass(frozen=True)
class ChainConfig:
    steps: int
    subsample_interval: int = 1
    epsilon: float = 0.02
    rng_seed: int = 0
    max_resplit_attempts: int = 100
    max_step_attempts: int = 10_000

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.subsample_interval < 1:
            raise ConfigError(f"subsample_interval must be >= 1, got {self.subsample_interval}")
        if not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.max_resplit_attempts < 1 or self.max_step_attempts < 1:
            raise ConfigError("attempt budgets must be positive")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class BiasConfig:
    """``party`` is ``(favoured vote attribute, opposing vote attribute)``."""

    party: tuple[str, str]
    safe_threshold: float = 0.53
    beta: float = 2.0

    def __post_init__(self):
        if not 0.5 < self.safe_threshold < 1:
            raise ConfigError(f"safe_threshold must lie in (0.5, 1), got {self.safe_threshold}")
        if self.beta <= 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")


@dataclass
class Ensemble:
    plans: list[Plan]
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.plans)

    def __iter__(self):
        return iter(self.plans)

    def __getitem__(self, i):
        return self.plans[i]


# ---------------------------------------------------------------- trees


def random_spanning_tree(
    g: DualGraph, subset: Iterable[int], rng: random.Random, check: bool = True
) -> list[tuple[int, int]]:
    """Uniform spanning tree of the subgraph induced on ``subset`` (Wilson's algorithm).

    Returns the tree as a list of ``(child, parent)`` node-position pairs
    oriented towards a random root.
    """
    nodes = sorted(subset)
    inside = set(nodes)
    if not nodes:
        raise DisconnectedSubset("empty subset")
    if check and not _connected(nodes, g.neighbors):
        raise DisconnectedSubset("induced subgraph is not connected")
    local: dict[int, list[int]] = {}
    root = nodes[rng.randrange(len(nodes))]
    in_tree = {root}
    nxt: dict[int, int] = {}
    for start in nodes:
        u = start
        while u not in in_tree:
            nb = local.get(u)
            if nb is None:
                nb = local[u] = [w for w in g.neighbors[u] if w in inside]
            w = nb[rng.randrange(len(nb))]
            nxt[u] = w
            u = w
        u = start
        while u not in in_tree:
            in_tree.add(u)
            u = nxt[u]
    return [(u, nxt[u]) for u in nodes if u != root]


def _target_bounds(target, epsilon: float) -> tuple[int, int]:
    t = target if isinstance(target, Fraction) else Fraction(target)
    eps = Fraction(epsilon)
    return math.ceil((1 - eps) * t), math.floor((1 + eps) * t)


def _subtree_populations(tree: Sequence[tuple[int, int]], populations) -> tuple[dict, dict, int]:
    """Population below every non-root node, with children lists, for a rooted tree."""
    children: dict[int, list[int]] = {}
    for c, p in tree:
        children.setdefault(p, []).append(c)
    parents = {c for c, _ in tree}
    if tree:
        root = next(p for _, p in tree if p not in parents)
    else:
        return {}, children, 0
    order = []
    stack = [root]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(children.get(u, ()))
    below = {}
    for u in reversed(order):
        below[u] = int(populations[u]) + sum(below[c] for c in children.get(u, ()))
    return below, children, below[root]


def _orient(tree: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    # Accept unoriented edge lists: root at the smallest node and orient by BFS.
    adj: dict[int, list[int]] = {}
    for a, b in tree:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    if not adj:
        return []
    root = min(adj)
    seen = {root}
    out = []
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                out.append((w, u))
                queue.append(w)
    return out


def _component(children: dict, top: int) -> list[int]:
    out = []
    stack = [top]
    while stack:
        u = stack.pop()
        out.append(u)
        stack.extend(children.get(u, ()))
    return out


def balanced_cut(tree, populations, target, epsilon: float, rng: random.Random | None = None):
    """A tree edge whose removal leaves two parts each within ``[(1-eps)T, (1+eps)T]``.

    Chosen uniformly among qualifying edges; ``None`` when no edge qualifies.
    """
    rng = rng or random.Random()
    tree = _orient(tree)
    lo, hi = _target_bounds(target, epsilon)
    below, _, total = _subtree_populations(tree, populations)
    cuts = [
        (c, p) for c, p in tree if lo <= below[c] <= hi and lo <= total - below[c] <= hi
    ]
    if not cuts:
        return None
    return cuts[rng.randrange(len(cuts))]


# ---------------------------------------------------------------- steps


def _district_pairs(g: DualGraph, labels: np.ndarray) -> list[tuple[int, int]]:
    pairs = set()
    for u, v in g.edges:
        a, b = labels[u], labels[v]
        if a != b:
            pairs.add((a, b) if a < b else (b, a))
    return sorted((int(a), int(b)) for a, b in pairs)


def recom_step(g: DualGraph, plan: Plan, rng: random.Random, cfg: ChainConfig) -> Plan:
    """Merge a random adjacent district pair and re-split it along a balanced tree cut."""
    labels = plan.labels
    pairs = _district_pairs(g, labels)
    lo, hi = population_bounds(g.total_population, plan.k, plan.epsilon)
    pops = g.population
    attempts = 0
    while attempts < cfg.max_step_attempts:
        i, j = pairs[rng.randrange(len(pairs))]
        region = np.flatnonzero((labels == i) | (labels == j)).tolist()
        for _ in range(cfg.max_resplit_attempts):
            attempts += 1
            tree = random_spanning_tree(g, region, rng, check=False)
            below, children, total = _subtree_populations(tree, pops)
            cuts = [c for c, _ in tree if lo <= below[c] <= hi and lo <= total - below[c] <= hi]
            if cuts:
                top = cuts[rng.randrange(len(cuts))]
                new = labels.copy()
                new[region] = j
                new[_component(children, top)] = i
                return _plan_unchecked(g, new, plan.k, plan.epsilon)
            if attempts >= cfg.max_step_attempts:
                break
    raise StepExhausted(f"no balanced recombination found in {attempts} tree draws")


def _connected_without(g: DualGraph, labels, district: int, removed: int) -> bool:
    start = None
    count = 0
    for w in g.neighbors[removed]:
        if labels[w] == district:
            start = w
            break
    if start is None:
        return False
    seen = {start, removed}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        count += 1
        for w in g.neighbors[u]:
            if w not in seen and labels[w] == district:
                seen.add(w)
                queue.append(w)
    return count == int(np.count_nonzero(labels == district)) - 1


def flip_candidates(g: DualGraph, labels) -> list[tuple[int, int]]:
    """All ``(boundary unit, adjacent district)`` pairs."""
    out = set()
    for u, v in g.edges:
        a, b = labels[u], labels[v]
        if a != b:
            out.add((u, int(b)))
            out.add((v, int(a)))
    return sorted(out)


def flip_step(g: DualGraph, plan: Plan, rng: random.Random) -> Plan:
    """Reassign one boundary unit to a neighbouring district.

    Proposals are drawn uniformly from (boundary unit, adjacent district)
    pairs; invalid ones are discarded and another is drawn.
    """
    labels = plan.labels
    lo, hi = population_bounds(g.total_population, plan.k, plan.epsilon)
    dpop = plan.district_population
    candidates = flip_candidates(g, labels)
    while candidates:
        idx = rng.randrange(len(candidates))
        v, target = candidates[idx]
        candidates[idx] = candidates[-1]
        candidates.pop()
        source = int(labels[v])
        p = int(g.population[v])
        if dpop[source] - p < lo or dpop[target] + p > hi:
            continue
        if not _connected_without(g, labels, source, v):
            continue
        new = labels.copy()
        new[v] = target
        pops = dpop.copy()
        pops[source] -= p
        pops[target] += p
        pops.setflags(write=False)
        new.setflags(write=False)
        return dataclasses.replace(plan, labels=new, district_population=pops)
    raise NoValidFlip("every boundary flip breaks contiguity or balance")


# ---------------------------------------------------------------- chains


def _progress(callback, kind: str, step: int, total: int, cadence: int):
    if callback is not None and (step % cadence == 0 or step == total):
        callback({"kind": kind, "step": step, "steps": total})


def run_chain(
    g: DualGraph,
    initial: Plan,
    cfg: ChainConfig,
    kind: str = "recom",
    progress: Callable[[dict], None] | None = None,
    progress_every: int = 1000,
) -> Ensemble:
    """Run ``cfg.steps`` steps and keep every ``subsample_interval``-th state."""
    if kind not in ("recom", "flip"):
        raise ConfigError(f"unknown chain kind {kind!r}")
    rng = random.Random(cfg.rng_seed)
    plan = initial
    kept = []
    for step in range(1, cfg.steps + 1):
        plan = recom_step(g, plan, rng, cfg) if kind == "recom" else flip_step(g, plan, rng)
        if step % cfg.subsample_interval == 0:
            kept.append(plan)
        _progress(progress, kind, step, cfg.steps, progress_every)
    meta = {
        "kind": kind,
        "config": dataclasses.asdict(cfg),
        "seed": cfg.rng_seed,
        "k": initial.k,
        "epsilon": initial.epsilon,
        "steps": cfg.steps,
        "retained": len(kept),
        "proposals": cfg.steps,
        "accepted": cfg.steps,
    }
    return Ensemble(kept, meta)


def district_shares(g: DualGraph, labels, k: int, party: Sequence[str]) -> np.ndarray:
    a = np.bincount(labels, weights=g.attribute(party[0]), minlength=k)
    b = np.bincount(labels, weights=g.attribute(party[1]), minlength=k)
    return a / (a + b)


def safe_seats(dg: DistrictGraph, party: Sequence[str], threshold: float = 0.53) -> int:
    """Number of districts where ``party[0]``'s two-party share exceeds ``threshold``."""
    return int(np.count_nonzero(vote_share(dg, party[0], party[1]) > threshold))


def metropolis_acceptance(delta_s: float, beta: float = 2.0) -> float:
    """Acceptance probability when the safe-seat count drops by ``delta_s``."""
    if delta_s <= 0:
        return 1.0
    return math.exp(-beta * delta_s)


def metropolis_accept(delta_s: float, beta: float, rng: random.Random) -> bool:
    prob = metropolis_acceptance(delta_s, beta)
    return prob >= 1.0 or rng.random() < prob


def biased_chain(
    g: DualGraph,
    initial: Plan,
    cfg: ChainConfig,
    bias: BiasConfig,
    progress: Callable[[dict], None] | None = None,
    progress_every: int = 1000,
) -> Ensemble:
    """Recombination chain with Metropolis weighting towards ``bias.party``'s safe seats.

    Every proposal counts as a step; rejected proposals repeat the current plan.
    """
    rng = random.Random(cfg.rng_seed)
    plan = initial

    def seats(p: Plan) -> int:
        shares = district_shares(g, p.labels, p.k, bias.party)
        return int(np.count_nonzero(shares > bias.safe_threshold))

    current = seats(plan)
    kept = []
    accepted = 0
    drops = 0
    for step in range(1, cfg.steps + 1):
        proposal = recom_step(g, plan, rng, cfg)
        s = seats(proposal)
        delta = current - s
        if delta > 0:
            drops += 1
        if metropolis_accept(delta, bias.beta, rng):
            plan, current = proposal, s
            accepted += 1
        if step % cfg.subsample_interval == 0:
            kept.append(plan)
        _progress(progress, "biased", step, cfg.steps, progress_every)
    meta = {
        "kind": "biased",
        "config": dataclasses.asdict(cfg),
        "bias": dataclasses.asdict(bias),
        "seed": cfg.rng_seed,
        "k": initial.k,
        "epsilon": initial.epsilon,
        "steps": cfg.steps,
        "retained": len(kept),
        "proposals": cfg.steps,
        "accepted": accepted,
        "seat_decreasing_proposals": drops,
    }
    return Ensemble(kept, meta)


# ---------------------------------------------------------------- seeding


def recursive_tree_part(
    g: DualGraph, k: int, epsilon: float, rng: random.Random, max_attempts: int = 1000
) -> Plan:
    """Initial plan by carving balanced districts off spanning trees one at a time."""
    lo, hi = population_bounds(g.total_population, k, epsilon)
    if lo > hi:
        raise StepExhausted("population bounds are empty")
    for _ in range(max_attempts):
        labels = np.full(g.n_nodes, -1, dtype=np.int64)
        remaining = list(range(g.n_nodes))
        ok = True
        for d in range(k - 1):
            left = k - d - 1  # districts still to draw after this one
            carved = None
            for _ in range(max_attempts):
                tree = random_spanning_tree(g, remaining, rng, check=False)
                below, children, total = _subtree_populations(tree, g.population)
                options = []
                for c, _p in tree:
                    inner, outer = below[c], total - below[c]
                    if lo <= inner <= hi and left * lo <= outer <= left * hi:
                        options.append((c, True))
                    if lo <= outer <= hi and left * lo <= inner <= left * hi:
                        options.append((c, False))
                if options:
                    c, take_inner = options[rng.randrange(len(options))]
                    part = set(_component(children, c))
                    carved = part if take_inner else set(remaining) - part
                    break
            if carved is None:
                ok = False
                break
            labels[sorted(carved)] = d
            remaining = [v for v in remaining if v not in carved]
        if ok:
            labels[remaining] = k - 1
            return _plan_unchecked(g, labels, k, epsilon)
    raise StepExhausted("could not seed a balanced plan")
