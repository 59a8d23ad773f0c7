"""Fréchet means of persistence diagrams under the 2-Wasserstein metric.

Each update matches the current candidate against every ensemble diagram,
sends unmatched candidate points to their diagonal projections, and moves
every candidate point to the mean of its images.  Several seeds are run and
the candidate with the lowest functional value is kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .metrics import Matching, diagonal_projection, wasserstein
from .persistence import INF, Diagram, DiagramPoint


@dataclass
class FrechetResult:
    mean: Diagram
    functional_value: float
    seed_id: int
    iterations: int
    per_iteration_functional: list[float]
    final_matchings: list[Matching]
    converged: bool = True
    seed_values: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "mean": [[p.birth, "inf" if p.death == INF else p.death] for p in self.mean.points],
            "functional_value": self.functional_value,
            "seed_id": self.seed_id,
            "iterations": self.iterations,
            "converged": self.converged,
            "per_iteration_functional": list(self.per_iteration_functional),
            "seed_values": {str(k): v for k, v in self.seed_values.items()},
        }


def _strip(d: Diagram) -> Diagram:
    return Diagram(tuple(DiagramPoint(p.birth, p.death) for p in d.points), d.k)


def _functional(matchings: Sequence[Matching]) -> float:
    return float(sum(m.cost**2 for m in matchings) / len(matchings))


def frechet_functional(candidate: Diagram, diagrams: Sequence[Diagram]) -> float:
    """Mean squared 2-Wasserstein distance from ``candidate`` to ``diagrams``."""
    if not diagrams:
        raise ValueError("empty ensemble")
    return _functional([wasserstein(candidate, d, 2.0) for d in diagrams])


def _stable_mean(values: list[float]) -> float:
    # exact when every value is identical
    ref = values[0]
    return ref + sum(v - ref for v in values) / len(values)


def _update(candidate: Diagram, diagrams: Sequence[Diagram], matchings: Sequence[Matching]) -> Diagram:
    images: list[list[tuple[float, float]]] = [[] for _ in candidate.points]
    for d, m in zip(diagrams, matchings):
        target = {a: b for a, b in m.pairs}
        for a, q in enumerate(candidate.points):
            if a in target:
                hit = d.points[target[a]]
                images[a].append((hit.birth, hit.death))
            elif q.death != INF:
                images[a].append(diagonal_projection(q))
    points = []
    for q, imgs in zip(candidate.points, images):
        if not imgs:
            points.append(q)
            continue
        b = _stable_mean([x[0] for x in imgs])
        d = INF if q.death == INF else _stable_mean([x[1] for x in imgs])
        points.append(DiagramPoint(b, d))
    return Diagram(tuple(points), candidate.k)


def frechet_update(candidate: Diagram, diagrams: Sequence[Diagram]) -> Diagram:
    """One matching-and-averaging step."""
    matchings = [wasserstein(candidate, d, 2.0) for d in diagrams]
    return _update(candidate, diagrams, matchings)


def _prune(d: Diagram) -> Diagram:
    return Diagram(tuple(p for p in d.points if p.death != p.birth), d.k)


def default_seeds(n: int, count: int = 20) -> list[int]:
    """Evenly spaced ensemble indices used as starting candidates."""
    if count >= n:
        return list(range(n))
    return sorted({int(round(x)) for x in np.linspace(0, n - 1, count)})


def _descend(seed: int, diagrams, max_iter: int, tol: float) -> FrechetResult:
    candidate = _strip(diagrams[seed])
    matchings = [wasserstein(candidate, d, 2.0) for d in diagrams]
    value = _functional(matchings)
    trace = [value]
    iterations = 0
    converged = False
    while iterations < max_iter:
        if value == 0.0:
            converged = True
            break
        proposal = _update(candidate, diagrams, matchings)
        new_matchings = [wasserstein(proposal, d, 2.0) for d in diagrams]
        new_value = _functional(new_matchings)
        iterations += 1
        trace.append(new_value)
        decrease = value - new_value
        candidate, matchings, value = proposal, new_matchings, new_value
        if decrease <= tol * max(abs(trace[-2]), 1e-300):
            converged = True
            break
    pruned = _prune(candidate)
    if len(pruned) != len(candidate):
        candidate = pruned
        matchings = [wasserstein(candidate, d, 2.0) for d in diagrams]
        value = _functional(matchings)
    return FrechetResult(candidate, value, seed, iterations, trace, matchings, converged)


def frechet_mean(
    diagrams: Sequence[Diagram],
    seed_indices: Sequence[int] | str | None = None,
    max_iter: int = 200,
    tol: float = 1e-8,
) -> FrechetResult:
    """Best local minimum of the Fréchet functional over several seeds.

    ``seed_indices`` may be a list of ensemble indices, ``"all"``, or
    ``None`` for :func:`default_seeds`.
    """
    diagrams = list(diagrams)
    if not diagrams:
        raise ValueError("empty ensemble")
    if seed_indices is None:
        seeds = default_seeds(len(diagrams))
    elif seed_indices == "all":
        seeds = list(range(len(diagrams)))
    else:
        seeds = [int(s) for s in seed_indices]
        bad = [s for s in seeds if not 0 <= s < len(diagrams)]
        if bad:
            raise IndexError(f"seed indices out of range: {bad}")
    best = None
    values = {}
    for s in seeds:
        res = _descend(s, diagrams, max_iter, tol)
        values[s] = res.functional_value
        if best is None or res.functional_value < best.functional_value:
            best = res
    best.seed_values = values
    return best


def all_seed_runs(diagrams: Sequence[Diagram], seed_indices: Sequence[int], max_iter: int = 200, tol: float = 1e-8):
    """Every seed's descent, for inspecting the per-seed traces."""
    return [_descend(int(s), list(diagrams), max_iter, tol) for s in seed_indices]
