"""Weighted similarity graphs over sessions and users.

Edge weights are reciprocal circular-time distances, floored at
``epsilon_s`` before inversion so identically-timed sessions get a
finite, capped weight. Session graphs are complete by default and switch
to a k-nearest-neighbour construction above a configurable node count;
user graphs are always complete (user counts stay small).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .circular import cross_distances, pairwise_distances, user_distance
from .errors import DomainError, EmptyProfile

DEFAULT_EPSILON_S = 1.0
DEFAULT_KNN_K = 50
DEFAULT_KNN_THRESHOLD = 2000

_KNN_CHUNK = 512


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with positive edge weights and no self-loops.

    Edges are stored as parallel arrays with ``u[i] < v[i]`` and at most
    one edge per unordered pair.
    """

    node_count: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @classmethod
    def from_edges(
        cls, node_count: int, edges: Sequence[tuple[int, int, float]]
    ) -> "WeightedGraph":
        if node_count < 0:
            raise DomainError("node_count must be non-negative")
        if not edges:
            empty = np.empty(0)
            return cls(node_count, empty.astype(int), empty.astype(int), empty)
        u = np.array([e[0] for e in edges], dtype=int)
        v = np.array([e[1] for e in edges], dtype=int)
        w = np.array([e[2] for e in edges], dtype=float)
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        cls._validate(node_count, lo, hi, w)
        return cls(node_count, lo, hi, w)

    @staticmethod
    def _validate(node_count: int, u: np.ndarray, v: np.ndarray, w: np.ndarray) -> None:
        if np.any(u == v):
            raise DomainError("self-loops are not allowed")
        if np.any((u < 0) | (v >= node_count)):
            raise DomainError("edge endpoint out of range")
        if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
            raise DomainError("edge weights must be positive and finite")
        pairs = u.astype(np.int64) * node_count + v.astype(np.int64)
        if len(np.unique(pairs)) != len(pairs):
            raise DomainError("duplicate edge for an unordered node pair")

    @property
    def edge_count(self) -> int:
        return len(self.w)

    def total_weight(self) -> float:
        return float(self.w.sum())

    def degrees(self) -> np.ndarray:
        """Weighted degree per node (sum of incident edge weights)."""
        deg = np.zeros(self.node_count)
        np.add.at(deg, self.u, self.w)
        np.add.at(deg, self.v, self.w)
        return deg

    def edges(self) -> Iterator[tuple[int, int, float]]:
        for i in range(len(self.w)):
            yield int(self.u[i]), int(self.v[i]), float(self.w[i])


def weights_from_distances(d: np.ndarray, epsilon_s: float) -> np.ndarray:
    """Reciprocal weights, with distances floored at epsilon_s first."""
    if epsilon_s <= 0:
        raise DomainError("epsilon_s must be positive")
    return 1.0 / np.maximum(d, epsilon_s)


def build_session_graph(
    X: np.ndarray,
    *,
    epsilon_s: float = DEFAULT_EPSILON_S,
    sparsify: str = "auto",
    knn_k: int = DEFAULT_KNN_K,
    knn_threshold: int = DEFAULT_KNN_THRESHOLD,
) -> WeightedGraph:
    """Similarity graph over one user's sessions.

    ``X`` is an (n, 2) array of [start_sod, end_sod]. ``sparsify`` is
    "complete", "knn", or "auto" (complete up to ``knn_threshold`` nodes,
    knn beyond). The knn graph keeps, for each node, edges to its
    ``knn_k`` nearest neighbours, unioned over directions.
    """
    X = np.asarray(X, dtype=float)
    n = len(X)
    if n < 1:
        raise DomainError("need at least one session")
    if sparsify not in ("auto", "complete", "knn"):
        raise DomainError(f"unknown sparsify mode: {sparsify!r}")
    if sparsify == "auto":
        sparsify = "complete" if n <= knn_threshold else "knn"

    if sparsify == "complete":
        d = pairwise_distances(X)
        iu, iv = np.triu_indices(n, k=1)
        w = weights_from_distances(d[iu, iv], epsilon_s)
        return WeightedGraph(n, iu, iv, w)

    if knn_k < 1:
        raise DomainError("knn_k must be at least 1")
    pair_d: dict[tuple[int, int], float] = {}
    for lo in range(0, n, _KNN_CHUNK):
        hi = min(lo + _KNN_CHUNK, n)
        block = cross_distances(X[lo:hi], X)
        for row, i in enumerate(range(lo, hi)):
            d_row = block[row].copy()
            d_row[i] = np.inf
            order = np.argsort(d_row, kind="stable")[: min(knn_k, n - 1)]
            for j in order:
                key = (i, int(j)) if i < j else (int(j), i)
                pair_d[key] = float(d_row[j])
    keys = sorted(pair_d)
    iu = np.array([k[0] for k in keys], dtype=int)
    iv = np.array([k[1] for k in keys], dtype=int)
    d = np.array([pair_d[k] for k in keys])
    return WeightedGraph(n, iu, iv, weights_from_distances(d, epsilon_s))


def select_centroid_index(distances: np.ndarray, ids: Sequence[int] | None = None) -> int:
    """Index of the member with maximal closeness centrality.

    ``distances`` is the (m, m) pairwise session-distance matrix of the
    cluster members. Closeness is (m-1) / sum of distances to the others,
    so the winner is the member with the smallest distance sum; ties go
    to the lowest id (``ids`` defaults to positional order).
    """
    D = np.asarray(distances, dtype=float)
    m = len(D)
    if m == 0:
        raise DomainError("cannot select a centroid from an empty cluster")
    if m == 1:
        return 0
    sums = D.sum(axis=1)
    if ids is None:
        return int(np.argmin(sums))
    order = sorted(range(m), key=lambda i: (sums[i], ids[i]))
    return order[0]


def build_user_graph(
    profiles: Sequence[np.ndarray], *, epsilon_s: float = DEFAULT_EPSILON_S
) -> WeightedGraph:
    """Complete similarity graph over users.

    Each profile is an (m_i, 2) array of that user's cluster-centroid
    [start_sod, end_sod] rows; edge weight is the reciprocal of the
    symmetric nearest-centroid-match distance, floored at epsilon_s.
    """
    n = len(profiles)
    if n < 2:
        raise DomainError("need at least two users to build a user graph")
    for p in profiles:
        if np.asarray(p).size == 0:
            raise EmptyProfile("every user profile must contain at least one centroid")
    iu, iv = np.triu_indices(n, k=1)
    d = np.array(
        [user_distance(profiles[a], profiles[b]) for a, b in zip(iu, iv)]
    )
    return WeightedGraph(n, iu, iv, weights_from_distances(d, epsilon_s))
