from __future__ import annotations

import random

import numpy as np
import pytest

from sessionkit import DomainError, EmptyGraph, WeightedGraph, gen_planted_graph, louvain, modularity
from helpers import (
    best_partition_bruteforce,
    brute_modularity,
    noisy_planted_graph,
    random_weighted_graph,
    two_triangle_bridge,
)


def _triangle() -> WeightedGraph:
    return WeightedGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])


def test_whole_graph_single_community_is_zero():
    g = two_triangle_bridge()
    assert modularity(g, np.zeros(6, dtype=int)) == pytest.approx(0.0, abs=1e-15)


def test_two_triangle_partition_value():
    g = two_triangle_bridge()
    q = modularity(g, np.array([0, 0, 0, 1, 1, 1]))
    assert q == pytest.approx(5.0 / 14.0, rel=1e-12)


def test_two_triangle_partition_is_exhaustive_optimum():
    g = two_triangle_bridge()
    best_q, best_labels = best_partition_bruteforce(g)
    assert best_q == pytest.approx(5.0 / 14.0, rel=1e-12)
    blocks = {tuple(np.flatnonzero(best_labels == c)) for c in set(best_labels)}
    assert blocks == {(0, 1, 2), (3, 4, 5)}


def test_all_singletons_on_triangle():
    q = modularity(_triangle(), np.array([0, 1, 2]))
    assert q == pytest.approx(-1.0 / 3.0, rel=1e-12)


def test_modularity_empty_graph_raises():
    g = WeightedGraph.from_edges(3, [])
    with pytest.raises(EmptyGraph):
        modularity(g, np.zeros(3, dtype=int))


def test_modularity_wrong_assignment_length():
    with pytest.raises(DomainError):
        modularity(_triangle(), np.array([0, 1]))


def test_modularity_rejects_negative_labels():
    with pytest.raises(DomainError):
        modularity(_triangle(), np.array([0, -1, 1]))


def test_modularity_matches_bruteforce_on_random_graphs():
    rng = random.Random(42)
    for _ in range(60):
        g = random_weighted_graph(rng, rng.randint(3, 8))
        labels = np.array([rng.randrange(3) for _ in range(g.node_count)])
        labels = np.unique(labels, return_inverse=True)[1]
        assert modularity(g, labels) == pytest.approx(
            brute_modularity(g, labels), rel=1e-9, abs=1e-12
        )


def test_louvain_two_disjoint_triangles():
    g = WeightedGraph.from_edges(
        6, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)]
    )
    part = louvain(g, seed=0)
    assert part.community_count == 2
    assert len(set(part.assignment[:3])) == 1
    assert len(set(part.assignment[3:])) == 1
    assert part.assignment[0] != part.assignment[3]


def test_louvain_single_node():
    g = WeightedGraph.from_edges(1, [])
    part = louvain(g, seed=0)
    assert part.community_count == 1
    assert part.modularity == 0.0


def test_louvain_edgeless_multinode():
    g = WeightedGraph.from_edges(4, [])
    part = louvain(g, seed=0)
    assert part.community_count == 4
    assert part.modularity == 0.0


def test_louvain_requires_a_node():
    with pytest.raises(DomainError):
        louvain(WeightedGraph.from_edges(0, []), seed=0)


def test_louvain_recovers_planted_blocks():
    g, labels = gen_planted_graph([10, 10, 10], 1.0, 0.01, seed=4)
    part = louvain(g, seed=0)
    assert part.community_count == 3
    # exact recovery up to relabelling
    mapping = {}
    for got, true in zip(part.assignment, labels):
        mapping.setdefault(got, true)
        assert mapping[got] == true


def test_louvain_reported_q_matches_modularity():
    rng = random.Random(7)
    for _ in range(20):
        g = random_weighted_graph(rng, rng.randint(3, 8))
        part = louvain(g, seed=rng.randrange(100))
        assert part.modularity == pytest.approx(
            modularity(g, part.assignment), rel=1e-9, abs=1e-12
        )
        assert part.modularity == pytest.approx(part.q_trace[-1], rel=1e-9, abs=1e-9)


def test_louvain_trace_starts_at_singletons_and_never_decreases():
    rng = random.Random(19)
    for _ in range(30):
        g = random_weighted_graph(rng, rng.randint(3, 8))
        part = louvain(g, seed=rng.randrange(100))
        singleton_q = modularity(g, np.arange(g.node_count))
        assert part.q_trace[0] == pytest.approx(singleton_q, rel=1e-9, abs=1e-12)
        for a, b in zip(part.q_trace, part.q_trace[1:]):
            assert b >= a - 1e-9
        assert part.modularity >= singleton_q - 1e-12


def test_louvain_deterministic_per_seed():
    rng = random.Random(3)
    g = random_weighted_graph(rng, 8)
    for seed in (0, 1, 99):
        a = louvain(g, seed=seed)
        b = louvain(g, seed=seed)
        assert np.array_equal(a.assignment, b.assignment)
        assert a.modularity == b.modularity
        assert a.q_trace == b.q_trace


def test_louvain_assignment_is_dense_first_appearance():
    g = two_triangle_bridge()
    part = louvain(g, seed=0)
    seen = []
    for c in part.assignment:
        if c not in seen:
            seen.append(c)
    assert seen == list(range(part.community_count))


def test_partition_modularity_within_bounds():
    rng = random.Random(5)
    for trial in range(40):
        g = random_weighted_graph(rng, rng.randint(3, 9))
        part = louvain(g, seed=trial)
        assert -0.5 - 1e-12 <= part.modularity <= 1.0 + 1e-12
        labels = np.array([rng.randrange(g.node_count) for _ in range(g.node_count)])
        labels = np.unique(labels, return_inverse=True)[1]
        assert -0.5 - 1e-12 <= modularity(g, labels) <= 1.0 + 1e-12


def test_louvain_nonnegative_when_positive_move_exists():
    rng = random.Random(77)
    for trial in range(60):
        g = random_weighted_graph(rng, rng.randint(3, 9))
        m = g.total_weight()
        deg = g.degrees()
        has_positive = any(
            w - deg[u] * deg[v] / (2.0 * m) > 0 for u, v, w in g.edges()
        )
        part = louvain(g, seed=trial)
        if has_positive:
            assert part.modularity >= -1e-12


def test_louvain_near_optimal_on_structured_graphs():
    rng = random.Random(123)
    for trial in range(25):
        g = noisy_planted_graph(rng)
        best_q, _ = best_partition_bruteforce(g)
        part = louvain(g, seed=trial + 1)
        if best_q > 0:
            assert part.modularity >= 0.95 * best_q - 1e-12
