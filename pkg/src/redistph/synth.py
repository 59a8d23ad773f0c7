"""Synthetic grid states with city-shaped Democratic vote peaks."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .graph_core import DualGraph, Election, NodeRecord, build_dual_graph

SYNTH_ELECTION = Election("SYN", "SYN_R", "SYN_D")


def grid_id(r: int, c: int) -> str:
    return f"r{r}c{c}"


def grid_edges(rows: int, cols: int) -> list[tuple[str, str]]:
    edges = [(grid_id(r, c), grid_id(r, c + 1)) for r in range(rows) for c in range(cols - 1)]
    edges += [(grid_id(r, c), grid_id(r + 1, c)) for r in range(rows - 1) for c in range(cols)]
    return edges


def synth_state(
    rows: int,
    cols: int,
    cities: Sequence[tuple[tuple[int, int], float, float]] = (),
    seed: int = 0,
    base_dem_share: float = 0.4,
    noise: float = 0.03,
    population: tuple[int, int] = (80, 120),
    turnout: tuple[float, float] = (0.45, 0.75),
    election: Election = SYNTH_ELECTION,
) -> DualGraph:
    """Grid dual graph with populations and one two-party election.

    Each city is ``((row, col), radius, intensity)``; it raises the Democratic
    share by ``intensity * exp(-dist / radius)`` where ``dist`` is grid
    (Manhattan) distance to its centre.  With no cities and ``noise=0`` every
    unit has the same share.
    """
    if rows < 2 or cols < 2:
        raise ValueError("grid needs at least 2 rows and 2 columns")
    rng = np.random.default_rng(seed)
    rr, cc = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    dem = np.full((rows, cols), float(base_dem_share))
    for (cr, ccol), radius, intensity in cities:
        dist = np.abs(rr - cr) + np.abs(cc - ccol)
        dem += intensity * np.exp(-dist / radius)
    if noise > 0:
        dem += rng.normal(0.0, noise, size=dem.shape)
    dem = np.clip(dem, 0.02, 0.98)
    if population[0] == population[1]:
        pops = np.full((rows, cols), population[0], dtype=np.int64)
    else:
        pops = rng.integers(population[0], population[1] + 1, size=(rows, cols))
    if turnout[0] == turnout[1]:
        votes = pops * turnout[0]
    else:
        votes = pops * rng.uniform(turnout[0], turnout[1], size=(rows, cols))
    nodes = [
        NodeRecord(
            grid_id(r, c),
            int(pops[r, c]),
            {election.republican: float(votes[r, c] * (1 - dem[r, c])), election.democratic: float(votes[r, c] * dem[r, c])},
        )
        for r in range(rows)
        for c in range(cols)
    ]
    return build_dual_graph(nodes, grid_edges(rows, cols))


def with_uniform_swing(g: DualGraph, base: Election, new: Election, delta: float) -> DualGraph:
    """Copy of ``g`` with an extra election whose unit Republican shares are shifted by ``delta``.

    Two-party turnout per unit is unchanged, so every district's share moves
    by exactly ``delta`` too.
    """
    r = g.attribute(base.republican)
    d = g.attribute(base.democratic)
    total = r + d
    share = np.divide(r, total, out=np.zeros_like(r), where=total > 0) + delta
    if np.any((share < 0) | (share > 1)):
        raise ValueError("swing pushes some unit share outside [0, 1]")
    attrs = dict(g.attributes)
    attrs[new.republican] = share * total
    attrs[new.democratic] = (1 - share) * total
    return DualGraph(g.ids, g.population, attrs, g.edges)
