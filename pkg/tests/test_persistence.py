import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import prefix_persistence, random_connected_graph
from redistph import errors
from redistph.graph_core import DistrictGraph
from redistph.persistence import (
    INF,
    Diagram,
    DiagramPoint,
    filtration_order,
    nw_quadrant,
    persistence_diagram,
    sublevel_diagram,
)


def dg(k, edges, values):
    return DistrictGraph(k, frozenset(edges), np.zeros(k, dtype=np.int64), {}).with_filtration(values)


def test_filtration_order():
    assert filtration_order(dg(3, [(0, 1), (1, 2)], [0.3, 0.1, 0.2])) == ([1, 2, 0], False)
    assert filtration_order(dg(2, [(0, 1)], [0.2, 0.2])) == ([0, 1], True)


def test_out_of_range():
    with pytest.raises(errors.FiltrationRangeError):
        filtration_order(dg(2, [(0, 1)], [0.2, 1.2]))


def test_missing_filtration():
    with pytest.raises(errors.MissingFiltration):
        persistence_diagram(DistrictGraph(1, frozenset(), np.zeros(1), {}))


def test_single_district():
    assert persistence_diagram(dg(1, [], [0.4])).pairs() == [(0.4, INF)]


def test_path_example():
    d = persistence_diagram(dg(3, [(0, 1), (1, 2)], [0.2, 0.6, 0.4]))
    assert d.pairs() == [(0.2, INF), (0.4, 0.6)]
    # w3 started the finite component
    assert [p.anchor for p in d.points] == [0, 2]


def test_disconnected_graph_rejected():
    with pytest.raises(errors.Disconnected):
        sublevel_diagram(3, [(0, 1)], [0.1, 0.2, 0.3])


def test_ties_flagged_and_diagonal_dropped():
    d = sublevel_diagram(3, [(0, 1), (1, 2)], [0.5, 0.5, 0.5])
    assert d.pairs() == [(0.5, INF)] and d.ties


def test_nw_quadrant():
    d = Diagram.from_pairs([(0.3, 0.6), (0.4, 0.45), (0.6, 0.9)])
    assert [(p.birth, p.death) for p in nw_quadrant(d)] == [(0.3, 0.6)]
    assert nw_quadrant(Diagram(())) == []
    assert len(nw_quadrant(Diagram.from_pairs([(0.49, INF)]))) == 1


def test_matches_prefix_oracle():
    rng = random.Random(5)
    for _ in range(300):
        k = rng.randint(1, 8)
        edges = random_connected_graph(rng, k, rng.random())
        values = rng.sample(range(1, 10_000), k)
        values = [v / 10_000 for v in values]
        got = [(p.birth, p.death, p.anchor) for p in sublevel_diagram(k, edges, values).points]
        assert got == prefix_persistence(k, edges, values)


def test_matches_prefix_oracle_with_ties():
    rng = random.Random(6)
    for _ in range(200):
        k = rng.randint(1, 8)
        edges = random_connected_graph(rng, k, rng.random())
        values = [rng.randint(0, 4) / 4 for _ in range(k)]
        got = [(p.birth, p.death, p.anchor) for p in sublevel_diagram(k, edges, values).points]
        assert got == prefix_persistence(k, edges, values)


graphs = st.integers(1, 9).flatmap(
    lambda k: st.tuples(
        st.just(k),
        st.randoms(use_true_random=False),
        st.lists(st.floats(0.0, 0.8, allow_nan=False), min_size=k, max_size=k, unique=True),
    )
)


@settings(max_examples=150, deadline=None)
@given(graphs)
def test_point_count_equals_local_minima(data):
    k, rng, values = data
    edges = random_connected_graph(rng, k, rng.random())
    nbrs = {v: [] for v in range(k)}
    for a, b in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    minima = [v for v in range(k) if all(values[v] < values[w] for w in nbrs[v])]
    d = sublevel_diagram(k, edges, values)
    assert len(d) == len(minima)
    assert sorted(p.anchor for p in d.points) == minima


dyadic_graphs = st.integers(1, 9).flatmap(
    lambda k: st.tuples(
        st.just(k),
        st.randoms(use_true_random=False),
        st.lists(st.integers(0, 800), min_size=k, max_size=k, unique=True),
    )
)


@settings(max_examples=150, deadline=None)
@given(dyadic_graphs, st.integers(0, 200))
def test_shift_moves_every_point(data, shift):
    # dyadic values keep every sum exact, so the shift is exact too
    k, rng, ints = data
    values = [v / 1024 for v in ints]
    c = shift / 1024
    edges = random_connected_graph(rng, k, rng.random())
    base = sublevel_diagram(k, edges, values)
    shifted = sublevel_diagram(k, edges, [v + c for v in values])
    assert [p.anchor for p in base.points] == [p.anchor for p in shifted.points]
    for p, q in zip(base.points, shifted.points):
        assert q.birth == p.birth + c
        assert q.death == (INF if p.death == INF else p.death + c)


@settings(max_examples=100, deadline=None)
@given(graphs)
def test_total_persistence_invariant_under_relabelling(data):
    k, rng, values = data
    edges = random_connected_graph(rng, k, rng.random())
    perm = list(range(k))
    rng.shuffle(perm)
    relabelled_edges = [(perm[a], perm[b]) for a, b in edges]
    relabelled_values = [0.0] * k
    for v in range(k):
        relabelled_values[perm[v]] = values[v]
    a = sublevel_diagram(k, edges, values)
    b = sublevel_diagram(k, relabelled_edges, relabelled_values)
    assert a.pairs() == b.pairs()
    assert sum(p.persistence for p in a.finite) == sum(p.persistence for p in b.finite)


def test_local_minimum_is_an_anchor():
    d = persistence_diagram(dg(4, [(0, 1), (1, 2), (2, 3)], [0.5, 0.3, 0.7, 0.2]))
    births = {p.anchor: p.birth for p in d.points}
    assert births == {1: 0.3, 3: 0.2}


def test_from_pairs_sorts():
    d = Diagram.from_pairs([(0.4, 0.6), (0.2, INF)])
    assert d.points[0] == DiagramPoint(0.2, INF)
