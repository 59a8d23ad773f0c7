import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_graph, path_edges
from oracles import isomorphic, random_connected_graph
from redistph import errors
from redistph.canon import canonical_form
from redistph.graph_core import (
    DistrictGraph,
    _plan_unchecked,
    Election,
    NodeRecord,
    build_dual_graph,
    canonical_class,
    district_graph,
    graph_statistics,
    isomorphism_variety,
    population_bounds,
    republican_share,
    statewide_share,
    validate_plan,
)
from redistph.synth import grid_edges, grid_id

E = Election("E", "r", "d")


def test_smallest_graph():
    g = make_graph([5, 5], [(0, 1)])
    assert (g.n_nodes, g.n_edges) == (2, 1)
    assert g.total_population == 10


def test_duplicate_edge_rejected():
    with pytest.raises(errors.DuplicateEdge):
        make_graph([1] * 4, [(0, 1), (1, 2), (2, 3), (3, 0), (1, 0)])


@pytest.mark.parametrize(
    "nodes, edges, exc",
    [
        ([NodeRecord("a", 1), NodeRecord("a", 1)], [], errors.DuplicateNode),
        ([NodeRecord("a", 1), NodeRecord("b", 1)], [("a", "a"), ("a", "b")], errors.SelfLoop),
        ([NodeRecord("a", 1), NodeRecord("b", 1)], [("a", "c")], errors.UnknownEdgeEndpoint),
        ([NodeRecord("a", 1), NodeRecord("b", 1)], [], errors.Disconnected),
        ([NodeRecord("a", -1), NodeRecord("b", 1)], [("a", "b")], errors.NegativeAttribute),
        ([NodeRecord("a", 1, {"r": -2.0}), NodeRecord("b", 1)], [("a", "b")], errors.NegativeAttribute),
    ],
)
def test_graph_validation_errors(nodes, edges, exc):
    with pytest.raises(exc):
        build_dual_graph(nodes, edges)


def test_grid_edge_count():
    # an n x n grid has 2 n (n - 1) adjacencies
    nodes = [NodeRecord(grid_id(r, c), 1) for r in range(10) for c in range(10)]
    g = build_dual_graph(nodes, grid_edges(10, 10))
    assert g.n_edges == 2 * 10 * 9 == 180


def test_missing_attribute_defaults_to_zero():
    g = build_dual_graph([NodeRecord("a", 1, {"r": 3.0}), NodeRecord("b", 1)], [("a", "b")])
    assert g.attribute("r").tolist() == [3.0, 0.0]


def test_exact_balance_plan():
    g = make_graph([5, 5], [(0, 1)])
    plan = validate_plan(g, {"0": 0, "1": 1}, 2, 0.02)
    assert plan.district_population.tolist() == [5, 5]
    assert plan.ideal_size == 5


def test_imbalance_reports_share():
    g = make_graph([5, 6], [(0, 1)])
    with pytest.raises(errors.PopulationImbalance) as info:
        validate_plan(g, [0, 1], 2, 0.02)
    # ideal 5.5: shares 5/5.5 = .909 and 6/5.5 = 1.09
    assert info.value.share == pytest.approx(5 / 5.5)


def test_population_bounds_are_exact():
    assert population_bounds(11, 2, 0.02) == (6, 5)  # empty range
    assert population_bounds(100, 4, 0.2) == (20, 30)


def test_disconnected_district():
    g = make_graph([1] * 4, path_edges(4))
    with pytest.raises(errors.DistrictDisconnected):
        validate_plan(g, {"0": 0, "1": 1, "2": 0, "3": 1}, 2, 0.5)


def test_missing_node():
    g = make_graph([1] * 4, path_edges(4))
    with pytest.raises(errors.MissingNode):
        validate_plan(g, {"0": 0, "1": 0, "2": 1}, 2, 0.5)


def test_district_graph_identity_aggregation():
    g = make_graph([5, 7], [(0, 1)], {"r": [1, 2], "d": [3, 4]})
    dg = district_graph(g, validate_plan(g, [0, 1], 2, 0.5))
    assert dg.edges == frozenset({(0, 1)})
    assert dg.population.tolist() == [5, 7]
    assert dg.attributes["r"].tolist() == [1, 2]


def test_six_cycle_three_arcs_is_triangle():
    edges = path_edges(6) + [(5, 0)]
    g = make_graph([1] * 6, edges)
    dg = district_graph(g, validate_plan(g, [0, 0, 1, 1, 2, 2], 3, 0.1))
    assert dg.edges == frozenset({(0, 1), (1, 2), (0, 2)})


def test_non_adjacent_districts_have_no_edge():
    g = make_graph([1] * 6, path_edges(6))
    dg = district_graph(g, validate_plan(g, [0, 0, 1, 1, 2, 2], 3, 0.1))
    assert (0, 2) not in dg.edges


def test_republican_share():
    g = make_graph([1, 1], [(0, 1)], {"r": [30, 10], "d": [70, 10]})
    dg = republican_share(district_graph(g, validate_plan(g, [0, 1], 2, 0.5)), E)
    assert dg.filtration.tolist() == [0.30, 0.5]
    assert statewide_share(g, E) == pytest.approx(40 / 120)


def test_zero_turnout():
    g = make_graph([1, 1], [(0, 1)], {"r": [0, 1], "d": [0, 1]})
    with pytest.raises(errors.ZeroTurnoutDistrict):
        republican_share(district_graph(g, validate_plan(g, [0, 1], 2, 0.5)), E)


def test_share_invariant_under_merging_units():
    rng = np.random.default_rng(3)
    r, d = rng.uniform(0, 10, 6), rng.uniform(1, 10, 6)
    g = make_graph([1] * 6, path_edges(6), {"r": r, "d": d})
    merged = make_graph([2, 1, 1, 2], path_edges(4), {"r": [r[0] + r[1], r[2], r[3], r[4] + r[5]], "d": [d[0] + d[1], d[2], d[3], d[4] + d[5]]})
    a = republican_share(district_graph(g, validate_plan(g, [0, 0, 0, 1, 1, 1], 2, 0.1)), E).filtration
    b = republican_share(district_graph(merged, validate_plan(merged, [0, 0, 1, 1], 2, 0.1)), E).filtration
    np.testing.assert_allclose(a, b, rtol=1e-14)


def _dg(k, edges):
    return DistrictGraph(k, frozenset(tuple(sorted(e)) for e in edges), np.zeros(k, dtype=np.int64), {})


def test_triangle_vs_path_keys_differ():
    assert canonical_class(_dg(3, [(0, 1), (1, 2), (0, 2)])) != canonical_class(_dg(3, [(0, 1), (1, 2)]))


def test_relabelled_graph_same_key():
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]
    perm = [3, 0, 4, 1, 2]
    other = [(perm[a], perm[b]) for a, b in edges]
    assert canonical_class(_dg(5, edges)) == canonical_class(_dg(5, other))


def test_eleven_graphs_on_four_vertices():
    pairs = list(itertools.combinations(range(4), 2))
    keys = {canonical_form(4, [pairs[i] for i in range(6) if mask >> i & 1]) for mask in range(64)}
    assert len(keys) == 11


def test_canonical_form_agrees_with_permutation_search():
    rng = random.Random(11)
    for _ in range(150):
        n = rng.randint(2, 7)
        a = random_connected_graph(rng, n, rng.random())
        if rng.random() < 0.5:
            perm = list(range(n))
            rng.shuffle(perm)
            b = [(perm[u], perm[v]) for u, v in a]
        else:
            b = random_connected_graph(rng, n, rng.random())
        same = canonical_form(n, a) == canonical_form(n, b)
        assert same == isomorphic(n, a, b)


def test_too_large_graph_unclassified():
    with pytest.raises(errors.TooLarge):
        canonical_form(5, [(0, 1)], limit=4)
    rep = isomorphism_variety([_dg(3, [(0, 1), (1, 2)]), _dg(3, [(1, 0), (0, 2)])], limit=2)
    assert rep["unclassified"] == 2


def test_variety_counts():
    dgs = [_dg(3, [(0, 1), (1, 2)]), _dg(3, [(0, 2), (1, 2)]), _dg(3, [(0, 1), (1, 2), (0, 2)])]
    rep = isomorphism_variety(dgs)
    assert rep["graphs"] == 3 and rep["distinct_classes"] == 2


def test_graph_statistics():
    s = graph_statistics([_dg(2, [(0, 1)])])
    assert s.diameter == [1] and s.density == [1.0]
    s = graph_statistics([_dg(5, [(i, (i + 1) % 5) for i in range(5)])])
    assert s.diameter == [2] and s.mean_degree == [2.0]
    k18 = _dg(18, itertools.combinations(range(18), 2))
    assert len(k18.edges) == 153
    assert graph_statistics([k18]).density == [1.0]


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 30), st.integers(2, 4), st.randoms(use_true_random=False))
def test_quotient_preserves_population_and_connectivity(n, k, rng):
    pops = [rng.randint(1, 9) for _ in range(n)]
    edges = path_edges(n) + [(rng.randrange(n), rng.randrange(n)) for _ in range(n // 2)]
    edges = sorted({tuple(sorted(e)) for e in edges if e[0] != e[1]})
    g = make_graph(pops, edges)
    cut = sorted(rng.sample(range(1, n), k - 1))
    labels = np.searchsorted(cut, np.arange(n), side="right")
    plan = _plan_unchecked(g, labels, k, 0.5)  # contiguous by construction; balance is irrelevant here
    assert int(plan.district_population.sum()) == g.total_population
    dg = district_graph(g, plan)
    adj = dg.neighbors()
    seen, stack = {0}, [0]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    assert len(seen) == k
