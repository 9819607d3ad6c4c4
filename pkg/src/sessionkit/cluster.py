"""Two-round aggregation: sessions into per-user clusters, users into
communities.

The first round clusters one user's sessions by recurring clock time;
singleton communities are reported as noise (sessions that drastically
deviate from the user's rhythm). The second round groups users by the
similarity of their cluster-centroid profiles. Both rounds run Louvain
on reciprocal-distance graphs and report the partition's modularity.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Mapping, Sequence

import numpy as np

from .circular import sod_matrix
from .errors import DomainError
from .estimators import SessionClusterer, UserCommunityDetector
from .graphs import DEFAULT_EPSILON_S, DEFAULT_KNN_K, DEFAULT_KNN_THRESHOLD
from .sessionize import Session

DEFAULT_MIN_REPORT_SIZE = 5


@dataclass(frozen=True)
class ClusterSummary:
    """One session-cluster of one user.

    The centroid is an actual member session (the one with maximal
    closeness centrality), never a synthetic mean point. ``session_days``
    is the set of calendar days on which the cluster has at least one
    session.
    """

    user_id: str
    cluster_id: int
    member_session_ids: tuple[int, ...]
    size: int
    centroid_session_id: int
    centroid_start_sod: float
    centroid_end_sod: float
    session_days: frozenset[date]

    @property
    def n_session_days(self) -> int:
        return len(self.session_days)


@dataclass(frozen=True)
class UserClusterResult:
    """All session-clusters of one user, noise separated out.

    ``clusters`` hold the non-noise clusters (size >= 2) and ``noise``
    the singleton communities; cluster ids run through both, ordered by
    descending size then earliest centroid time.
    """

    user_id: str
    clusters: tuple[ClusterSummary, ...]
    noise: tuple[ClusterSummary, ...]
    modularity: float

    @property
    def all_rows(self) -> tuple[ClusterSummary, ...]:
        return self.clusters + self.noise


def cluster_sessions(
    sessions: Sequence[Session],
    *,
    epsilon_s: float = DEFAULT_EPSILON_S,
    sparsify: str = "auto",
    knn_k: int = DEFAULT_KNN_K,
    knn_threshold: int = DEFAULT_KNN_THRESHOLD,
    seed: int = 0,
) -> UserClusterResult:
    """Cluster one user's sessions by recurring clock time."""
    if not sessions:
        raise DomainError("cluster_sessions requires at least one session")
    user_ids = {s.user_id for s in sessions}
    if len(user_ids) != 1:
        raise DomainError(f"sessions of exactly one user expected, got {sorted(user_ids)}")
    user_id = sessions[0].user_id
    ordered = sorted(sessions, key=lambda s: s.session_id)

    est = SessionClusterer(
        epsilon_s=epsilon_s,
        sparsify=sparsify,
        knn_k=knn_k,
        knn_threshold=knn_threshold,
        random_state=seed,
    ).fit(sod_matrix(ordered))

    clusters = [
        _summary(user_id, label + 1, ordered, np.flatnonzero(est.labels_ == label),
                 int(est.centroid_indices_[label]))
        for label in range(est.n_clusters_)
    ]
    noise_sorted = sorted(
        (int(i) for i in est.noise_indices_),
        key=lambda i: (ordered[i].start_sod, ordered[i].end_sod, ordered[i].session_id),
    )
    noise = [
        _summary(user_id, est.n_clusters_ + rank + 1, ordered, [i], i)
        for rank, i in enumerate(noise_sorted)
    ]
    return UserClusterResult(user_id, tuple(clusters), tuple(noise), est.modularity_)


def _summary(
    user_id: str,
    cluster_id: int,
    sessions: Sequence[Session],
    member_indices,
    centroid_index: int,
) -> ClusterSummary:
    members = [sessions[int(i)] for i in member_indices]
    centroid = sessions[centroid_index]
    return ClusterSummary(
        user_id=user_id,
        cluster_id=cluster_id,
        member_session_ids=tuple(s.session_id for s in members),
        size=len(members),
        centroid_session_id=centroid.session_id,
        centroid_start_sod=centroid.start_sod,
        centroid_end_sod=centroid.end_sod,
        session_days=frozenset(s.day_key for s in members),
    )


@dataclass(frozen=True)
class CommunitySummary:
    community_id: int
    size: int
    share: float
    small: bool
    user_ids: tuple[str, ...]


@dataclass(frozen=True)
class CommunityResult:
    """User-community detection output.

    Communities smaller than ``min_report_size`` are flagged small but
    retained. Users whose profile was empty are excluded from detection
    and listed.
    """

    memberships: dict[str, int]
    communities: tuple[CommunitySummary, ...]
    modularity: float
    excluded_users: tuple[str, ...]
    min_report_size: int


def detect_user_communities(
    profiles: Mapping[str, Sequence[ClusterSummary]],
    *,
    epsilon_s: float = DEFAULT_EPSILON_S,
    seed: int = 0,
    min_report_size: int = DEFAULT_MIN_REPORT_SIZE,
) -> CommunityResult:
    """Group users into communities by their cluster-centroid profiles.

    ``profiles`` maps user_id to that user's (typically non-noise)
    session-clusters. Community ids are 1-based, ordered by descending
    size then lowest user id.
    """
    users = sorted(profiles)
    included = [u for u in users if len(profiles[u]) > 0]
    excluded = tuple(u for u in users if len(profiles[u]) == 0)
    if len(included) < 2:
        raise DomainError("need at least two users with non-empty profiles")

    arrays = [
        np.array(
            [(c.centroid_start_sod, c.centroid_end_sod) for c in profiles[u]],
            dtype=float,
        )
        for u in included
    ]
    est = UserCommunityDetector(epsilon_s=epsilon_s, random_state=seed).fit(arrays)

    memberships = {u: int(est.labels_[i]) + 1 for i, u in enumerate(included)}
    communities = []
    n = len(included)
    for label in range(est.n_communities_):
        uids = tuple(u for u in included if memberships[u] == label + 1)
        size = len(uids)
        communities.append(
            CommunitySummary(
                community_id=label + 1,
                size=size,
                share=size / n,
                small=size < min_report_size,
                user_ids=uids,
            )
        )
    return CommunityResult(
        memberships=memberships,
        communities=tuple(communities),
        modularity=est.modularity_,
        excluded_users=excluded,
        min_report_size=min_report_size,
    )
