import math
import random
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from conftest import make_graph, path_edges
from redistph import errors
from redistph.chains import (
    BiasConfig,
    ChainConfig,
    balanced_cut,
    biased_chain,
    district_shares,
    flip_step,
    metropolis_accept,
    metropolis_acceptance,
    random_spanning_tree,
    recom_step,
    recursive_tree_part,
    run_chain,
    safe_seats,
)
from redistph.graph_core import DistrictGraph, _plan_unchecked, validate_plan
from redistph.synth import SYNTH_ELECTION, synth_state


def tree_key(tree):
    return frozenset(frozenset(e) for e in tree)


def test_two_node_tree():
    g = make_graph([1, 1], [(0, 1)])
    assert tree_key(random_spanning_tree(g, [0, 1], random.Random(0))) == tree_key([(0, 1)])


def test_disconnected_subset():
    g = make_graph([1] * 3, path_edges(3))
    with pytest.raises(errors.DisconnectedSubset):
        random_spanning_tree(g, [0, 2], random.Random(0))


@pytest.mark.parametrize(
    "n, edges, n_trees",
    [
        (3, [(0, 1), (1, 2), (0, 2)], 3),
        (4, [(0, 1), (1, 2), (2, 3), (3, 0)], 4),
        (4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)], 16),
        (5, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (2, 4)], 12),
    ],
)
def test_spanning_trees_are_uniform(n, edges, n_trees):
    g = make_graph([1] * n, edges)
    rng = random.Random(1234)
    counts = Counter(tree_key(random_spanning_tree(g, range(n), rng)) for _ in range(10_000))
    assert len(counts) == n_trees
    assert chisquare(list(counts.values())).pvalue > 0.01
    if n_trees <= 4:
        for c in counts.values():
            assert abs(c / 10_000 - 1 / n_trees) < 0.02


def test_balanced_cut_examples():
    assert set(balanced_cut(path_edges(4), [1] * 4, 2, 0.02)) == {1, 2}
    assert balanced_cut(path_edges(3), [1] * 3, 1.5, 0.02) is None
    star = [(0, 1), (0, 2), (0, 3), (0, 4)]
    assert balanced_cut(star, [1] * 5, 2.5, 0.25) is None


def test_recom_keeps_2_2_split():
    g = make_graph([1] * 4, path_edges(4))
    plan = validate_plan(g, [0, 0, 1, 1], 2, 0.02)
    cfg = ChainConfig(steps=1, epsilon=0.02)
    rng = random.Random(0)
    for _ in range(50):
        plan = recom_step(g, plan, rng, cfg)
        assert sorted(plan.district_population.tolist()) == [2, 2]


def test_recom_exhaustion():
    # star with an imbalanced current split: every cut isolates a single leaf
    g = make_graph([1] * 5, [(0, 1), (0, 2), (0, 3), (0, 4)])
    plan = _plan_unchecked(g, [0, 0, 0, 1, 0], 2, 0.25)
    cfg = ChainConfig(steps=1, epsilon=0.25, max_resplit_attempts=5, max_step_attempts=20)
    with pytest.raises(errors.StepExhausted):
        recom_step(g, plan, random.Random(0), cfg)


@pytest.fixture(scope="module")
def grid():
    return synth_state(10, 10, [((3, 3), 2.0, 0.4)], seed=7)


def test_recom_closure_and_locality(grid):
    rng = random.Random(3)
    plan = recursive_tree_part(grid, 5, 0.05, rng)
    cfg = ChainConfig(steps=1, epsilon=0.05)
    for _ in range(1000):
        nxt = recom_step(grid, plan, rng, cfg)
        validate_plan(grid, nxt.labels, 5, 0.05)
        same = [d for d in range(5) if np.array_equal(plan.members(d), nxt.members(d))]
        assert len(same) >= 3
        plan = nxt


def test_flip_examples():
    g = make_graph([1] * 4, path_edges(4))
    plan = validate_plan(g, [0, 0, 1, 1], 2, 0.5)
    out = flip_step(g, plan, random.Random(0))
    assert sorted(out.district_population.tolist()) == [1, 3]
    tight = validate_plan(g, [0, 0, 1, 1], 2, 0.02)
    with pytest.raises(errors.NoValidFlip):
        flip_step(g, tight, random.Random(0))


def test_flip_blocked_by_contiguity():
    g = make_graph([1] * 4, [(0, 1), (0, 2), (0, 3)])
    plan = _plan_unchecked(g, [0, 0, 0, 1], 2, 0.9)
    with pytest.raises(errors.NoValidFlip):
        flip_step(g, plan, random.Random(0))


def test_flip_changes_one_unit(grid):
    rng = random.Random(5)
    plan = recursive_tree_part(grid, 4, 0.1, rng)
    for _ in range(300):
        nxt = flip_step(grid, plan, rng)
        assert np.count_nonzero(nxt.labels != plan.labels) == 1
        validate_plan(grid, nxt.labels, 4, 0.1)
        plan = nxt


def test_config_validation():
    for bad in ({"steps": 0}, {"steps": 5, "subsample_interval": 0}, {"steps": 5, "epsilon": 0}, {"steps": 5, "rng_seed": -1}):
        with pytest.raises(errors.ConfigError):
            ChainConfig(**bad)
    with pytest.raises(errors.ConfigError):
        BiasConfig(("a", "b"), safe_threshold=0.4)


def test_subsampling_and_determinism(grid):
    init = recursive_tree_part(grid, 4, 0.05, random.Random(1))
    cfg = ChainConfig(steps=100, subsample_interval=10, epsilon=0.05, rng_seed=42)
    a = run_chain(grid, init, cfg)
    b = run_chain(grid, init, cfg)
    assert len(a) == 10
    assert a.plans == b.plans
    c = run_chain(grid, init, ChainConfig(steps=10, epsilon=0.05, rng_seed=42), "flip")
    d = run_chain(grid, init, ChainConfig(steps=10, epsilon=0.05, rng_seed=42), "flip")
    assert c.plans == d.plans


def test_progress_cadence(grid):
    init = recursive_tree_part(grid, 4, 0.05, random.Random(1))
    seen = []
    run_chain(grid, init, ChainConfig(steps=25, epsilon=0.05), progress=seen.append, progress_every=10)
    assert [r["step"] for r in seen] == [10, 20, 25]


def test_safe_seats():
    def dg(shares):
        k = len(shares)
        return DistrictGraph(k, frozenset(), np.zeros(k), {"D": np.array(shares), "R": 1 - np.array(shares)})

    assert safe_seats(dg([0.52, 0.54, 0.60]), ("D", "R")) == 2
    assert safe_seats(dg([0.5, 0.5]), ("D", "R")) == 0


def test_metropolis_probabilities():
    assert metropolis_acceptance(0, 2) == 1
    assert metropolis_acceptance(-3, 2) == 1
    assert metropolis_acceptance(1, 2) == pytest.approx(0.1353, abs=1e-4)
    assert metropolis_acceptance(2, 2) == pytest.approx(math.exp(-4))
    rng = random.Random(0)
    assert all(metropolis_accept(0, 2, rng) for _ in range(100))


def test_biased_chain_favours_party(grid):
    init = recursive_tree_part(grid, 6, 0.1, random.Random(2))
    cfg = ChainConfig(steps=300, subsample_interval=3, epsilon=0.1, rng_seed=9)
    dem = (SYNTH_ELECTION.democratic, SYNTH_ELECTION.republican)
    biased = biased_chain(grid, init, cfg, BiasConfig(dem, 0.53, 2.0))
    neutral = run_chain(grid, init, cfg)

    def mean_seats(ens):
        return np.mean([np.count_nonzero(district_shares(grid, p.labels, p.k, dem) > 0.53) for p in ens])

    assert len(biased) == 100
    assert biased.metadata["proposals"] == 300
    assert mean_seats(biased) >= mean_seats(neutral)


def test_recursive_tree_part_is_valid(grid):
    for k in (2, 3, 7):
        plan = recursive_tree_part(grid, k, 0.05, random.Random(k))
        validate_plan(grid, plan.labels, k, 0.05)
