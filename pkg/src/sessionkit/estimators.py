"""Scikit-learn style estimators for the clustering core.

All three estimators follow the sklearn clusterer contract: parameters
are plain constructor attributes (``get_params``/``set_params`` work and
the objects are clonable), ``fit`` returns ``self`` and exposes fitted
state through trailing-underscore attributes, and ``fit_predict`` comes
from ``ClusterMixin``. ``random_state`` is an integer seed controlling
only node visiting order: 0 means a deterministic ascending sweep, any
other value a seeded shuffle.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from .circular import cross_distances
from .errors import DomainError, EmptyProfile
from .graphs import (
    DEFAULT_EPSILON_S,
    DEFAULT_KNN_K,
    DEFAULT_KNN_THRESHOLD,
    WeightedGraph,
    build_session_graph,
    build_user_graph,
    select_centroid_index,
)
from .louvain import louvain

_DAY_S = 86400.0


def _check_sod_features(X, name: str) -> np.ndarray:
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_min_samples=1)
    if X.shape[1] != 2:
        raise DomainError(
            f"{name} expects two columns [start_sod, end_sod], got {X.shape[1]}"
        )
    if np.any((X < 0.0) | (X >= _DAY_S)):
        raise DomainError("seconds-of-day must lie in [0, 86400)")
    return X


class LouvainCommunities(ClusterMixin, BaseEstimator):
    """Louvain community detection over a precomputed affinity.

    ``fit`` accepts either a WeightedGraph or a square symmetric matrix
    of non-negative similarities (the strict upper triangle defines the
    edges; the diagonal is ignored).

    Attributes after fit: ``labels_``, ``n_communities_``,
    ``modularity_``, ``q_trace_``.
    """

    def __init__(self, random_state: int = 0):
        self.random_state = random_state

    def fit(self, X, y=None):
        if isinstance(X, WeightedGraph):
            graph = X
        else:
            graph = self._graph_from_affinity(X)
        part = louvain(graph, seed=self.random_state)
        self.labels_ = part.assignment
        self.n_communities_ = part.community_count
        self.modularity_ = part.modularity
        self.q_trace_ = part.q_trace
        return self

    @staticmethod
    def _graph_from_affinity(X) -> WeightedGraph:
        W = check_array(X, dtype=np.float64, ensure_2d=True)
        n = W.shape[0]
        if W.shape[1] != n:
            raise DomainError(f"affinity matrix must be square, got {W.shape}")
        if not np.allclose(W, W.T, rtol=1e-9, atol=1e-12):
            raise DomainError("affinity matrix must be symmetric")
        if np.any(W < 0.0):
            raise DomainError("affinity entries must be non-negative")
        iu, iv = np.triu_indices(n, k=1)
        mask = W[iu, iv] > 0.0
        return WeightedGraph(n, iu[mask], iv[mask], W[iu, iv][mask])


class SessionClusterer(ClusterMixin, BaseEstimator):
    """Cluster one user's sessions by recurring clock time.

    ``X`` is an (n_sessions, 2) array of [start_sod, end_sod]. Sessions
    are nodes of a reciprocal-distance similarity graph; Louvain
    communities become clusters. Communities of size 1 are noise and get
    label -1, mirroring the DBSCAN convention. Non-noise clusters are
    labelled 0..k-1 ordered by descending size, then earliest centroid.

    Attributes after fit: ``labels_``, ``n_clusters_``, ``modularity_``,
    ``centroid_indices_`` (the member chosen as each cluster's centroid,
    by maximal closeness centrality), ``noise_indices_``, ``q_trace_``.
    """

    def __init__(
        self,
        epsilon_s: float = DEFAULT_EPSILON_S,
        sparsify: str = "auto",
        knn_k: int = DEFAULT_KNN_K,
        knn_threshold: int = DEFAULT_KNN_THRESHOLD,
        random_state: int = 0,
    ):
        self.epsilon_s = epsilon_s
        self.sparsify = sparsify
        self.knn_k = knn_k
        self.knn_threshold = knn_threshold
        self.random_state = random_state

    def fit(self, X, y=None):
        X = _check_sod_features(X, type(self).__name__)
        graph = build_session_graph(
            X,
            epsilon_s=self.epsilon_s,
            sparsify=self.sparsify,
            knn_k=self.knn_k,
            knn_threshold=self.knn_threshold,
        )
        part = louvain(graph, seed=self.random_state)

        members: dict[int, list[int]] = {}
        for idx, c in enumerate(part.assignment):
            members.setdefault(int(c), []).append(idx)

        keyed = []
        noise: list[int] = []
        for c, idxs in members.items():
            if len(idxs) == 1:
                noise.append(idxs[0])
                continue
            pts = X[idxs]
            centroid_pos = select_centroid_index(cross_distances(pts, pts), ids=idxs)
            centroid = idxs[centroid_pos]
            keyed.append(
                ((-len(idxs), X[centroid, 0], X[centroid, 1], idxs[0]), idxs, centroid)
            )
        keyed.sort(key=lambda item: item[0])

        labels = np.full(len(X), -1, dtype=int)
        centroids = []
        for label, (_, idxs, centroid) in enumerate(keyed):
            labels[idxs] = label
            centroids.append(centroid)

        self.labels_ = labels
        self.n_clusters_ = len(keyed)
        self.centroid_indices_ = np.array(centroids, dtype=int)
        self.noise_indices_ = np.array(sorted(noise), dtype=int)
        self.modularity_ = part.modularity
        self.q_trace_ = part.q_trace
        return self


class UserCommunityDetector(ClusterMixin, BaseEstimator):
    """Group users whose session clusters recur at similar clock times.

    ``X`` is a sequence of per-user profiles, each an (m_i, 2) array of
    cluster-centroid [start_sod, end_sod] rows. Users are nodes of a
    complete graph weighted by the reciprocal of the symmetric
    nearest-centroid-match distance between profiles. Labels are 0..k-1
    ordered by descending community size, then lowest member index.

    Attributes after fit: ``labels_``, ``n_communities_``,
    ``community_sizes_``, ``modularity_``, ``q_trace_``.
    """

    def __init__(self, epsilon_s: float = DEFAULT_EPSILON_S, random_state: int = 0):
        self.epsilon_s = epsilon_s
        self.random_state = random_state

    def fit(self, X: Sequence[np.ndarray], y=None):
        profiles = []
        for i, p in enumerate(X):
            arr = np.asarray(p, dtype=float)
            if arr.size == 0:
                raise EmptyProfile(f"profile {i} has no centroids")
            profiles.append(_check_sod_features(arr, type(self).__name__))
        if len(profiles) < 2:
            raise DomainError("need at least two user profiles")

        graph = build_user_graph(profiles, epsilon_s=self.epsilon_s)
        part = louvain(graph, seed=self.random_state)

        members: dict[int, list[int]] = {}
        for idx, c in enumerate(part.assignment):
            members.setdefault(int(c), []).append(idx)
        ordered = sorted(members.values(), key=lambda idxs: (-len(idxs), idxs[0]))

        labels = np.empty(len(profiles), dtype=int)
        for label, idxs in enumerate(ordered):
            labels[idxs] = label
        self.labels_ = labels
        self.n_communities_ = len(ordered)
        self.community_sizes_ = np.array([len(idxs) for idxs in ordered], dtype=int)
        self.modularity_ = part.modularity
        self.q_trace_ = part.q_trace
        return self
