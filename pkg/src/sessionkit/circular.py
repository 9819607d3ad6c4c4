"""Cyclical time-of-day distances.

Timestamps are reduced to seconds-of-day on a 24-hour clock, so 23:59
and 00:01 are two minutes apart, not almost a day. Sessions are compared
as (start, end) points via the Euclidean combination of the two circular
differences; the calendar day never enters the distance.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import DomainError, EmptyProfile

if TYPE_CHECKING:
    from .sessionize import Session

DAY_S = 86400.0
HALF_DAY_S = 43200.0


def circ_diff(a_sod: float, b_sod: float) -> float:
    """Shortest clock distance between two seconds-of-day, in [0, 43200]."""
    if not (0.0 <= a_sod < DAY_S) or not (0.0 <= b_sod < DAY_S):
        raise DomainError(
            f"seconds-of-day must lie in [0, 86400): got {a_sod!r}, {b_sod!r}"
        )
    d = abs(a_sod - b_sod)
    return min(d, DAY_S - d)


def circ_diff_array(a_sod: np.ndarray, b_sod: np.ndarray) -> np.ndarray:
    """Element/broadcast-wise circ_diff over numpy arrays."""
    a = np.asarray(a_sod, dtype=float)
    b = np.asarray(b_sod, dtype=float)
    if np.any((a < 0.0) | (a >= DAY_S)) or np.any((b < 0.0) | (b >= DAY_S)):
        raise DomainError("seconds-of-day must lie in [0, 86400)")
    d = np.abs(a - b)
    return np.minimum(d, DAY_S - d)


def session_distance(p: "Session", q: "Session") -> float:
    """Euclidean distance between two sessions in circular (start, end) space."""
    ds = circ_diff(p.start_sod, q.start_sod)
    de = circ_diff(p.end_sod, q.end_sod)
    return math.hypot(ds, de)


def sod_matrix(sessions: Sequence["Session"]) -> np.ndarray:
    """Stack sessions into an (n, 2) array of [start_sod, end_sod]."""
    return np.array([(s.start_sod, s.end_sod) for s in sessions], dtype=float)


def pairwise_distances(X: np.ndarray) -> np.ndarray:
    """Full (n, n) session-distance matrix for an (n, 2) sod array."""
    X = _check_sod_points(X)
    ds = circ_diff_array(X[:, None, 0], X[None, :, 0])
    de = circ_diff_array(X[:, None, 1], X[None, :, 1])
    return np.sqrt(ds * ds + de * de)


def cross_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """(len(A), len(B)) session-distance matrix between two sod arrays."""
    A = _check_sod_points(A)
    B = _check_sod_points(B)
    ds = circ_diff_array(A[:, None, 0], B[None, :, 0])
    de = circ_diff_array(A[:, None, 1], B[None, :, 1])
    return np.sqrt(ds * ds + de * de)


def user_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Temporal-profile distance between two users' centroid sets.

    ``a`` and ``b`` are (m, 2) arrays of cluster-centroid [start_sod,
    end_sod] rows. Each centroid is matched to its nearest counterpart
    in the other profile and the nearest-match distances are averaged
    symmetrically over both directions. This keeps the distance zero for
    identical profiles and small whenever two users share the same usage
    slots, regardless of how spread out over the clock those slots are
    (a plain mean over all centroid pairs would make a user with
    morning-to-evening slots look as far from an identical twin as from
    a stranger).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise EmptyProfile("user_distance requires at least one centroid per user")
    d = cross_distances(a, b)
    return float(0.5 * (d.min(axis=1).mean() + d.min(axis=0).mean()))


def _check_sod_points(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != 2:
        raise DomainError(f"expected an (n, 2) array of sod pairs, got shape {X.shape}")
    return X
