"""Independent oracles shared across the test suite.

These deliberately re-derive quantities through different formulas and
code paths than the package uses, so agreement is evidence, not
tautology.
"""

from __future__ import annotations

import random
from itertools import combinations

import numpy as np

from sessionkit import WeightedGraph


def adjacency(g: WeightedGraph) -> np.ndarray:
    A = np.zeros((g.node_count, g.node_count))
    A[g.u, g.v] = g.w
    A[g.v, g.u] = g.w
    return A


def brute_modularity(g: WeightedGraph, labels) -> float:
    """Newman modularity via the full double sum over node pairs."""
    A = adjacency(g)
    labels = np.asarray(labels)
    m = A.sum() / 2.0
    k = A.sum(axis=1)
    q = 0.0
    n = g.node_count
    for i in range(n):
        for j in range(n):
            if labels[i] == labels[j]:
                q += A[i, j] - k[i] * k[j] / (2.0 * m)
    return q / (2.0 * m)


def set_partitions(items: list):
    """Yield every partition of ``items`` as a list of blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partial in set_partitions(rest):
        for i in range(len(partial)):
            yield partial[:i] + [[first] + partial[i]] + partial[i + 1:]
        yield [[first]] + partial


def partition_to_labels(blocks: list[list[int]], n: int) -> np.ndarray:
    labels = np.empty(n, dtype=int)
    for c, block in enumerate(blocks):
        for node in block:
            labels[node] = c
    return labels


def best_partition_bruteforce(g: WeightedGraph) -> tuple[float, np.ndarray]:
    """Exhaustive maximum-modularity partition (fast block-sum evaluation)."""
    A = adjacency(g)
    m = A.sum() / 2.0
    k = A.sum(axis=1)
    best_q, best_labels = -np.inf, None
    for blocks in set_partitions(list(range(g.node_count))):
        q = 0.0
        for block in blocks:
            idx = np.array(block)
            q += A[np.ix_(idx, idx)].sum() / (2.0 * m) - (k[idx].sum() / (2.0 * m)) ** 2
        if q > best_q:
            best_q = q
            best_labels = partition_to_labels(blocks, g.node_count)
    return best_q, best_labels


def random_weighted_graph(rng: random.Random, n: int) -> WeightedGraph:
    """Random weighted graph with at least one edge."""
    while True:
        edges = [
            (u, v, rng.uniform(0.1, 2.0))
            for u, v in combinations(range(n), 2)
            if rng.random() < 0.55
        ]
        if edges:
            return WeightedGraph.from_edges(n, edges)


def noisy_planted_graph(rng: random.Random) -> WeightedGraph:
    """Small weighted graph with 2-3 noisy planted blocks (<= 8 nodes)."""
    while True:
        sizes = [rng.randint(2, 4) for _ in range(rng.randint(2, 3))]
        if sum(sizes) <= 8:
            break
    labels = [b for b, s in enumerate(sizes) for _ in range(s)]
    n = len(labels)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if labels[i] == labels[j]:
                edges.append((i, j, rng.uniform(0.6, 1.4)))
            elif rng.random() < 0.7:
                edges.append((i, j, rng.uniform(0.05, 0.4)))
    return WeightedGraph.from_edges(n, edges)


def two_triangle_bridge() -> WeightedGraph:
    """Two unit-weight triangles joined by a single unit bridge edge."""
    return WeightedGraph.from_edges(
        6,
        [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0),
         (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0),
         (2, 3, 1.0)],
    )
