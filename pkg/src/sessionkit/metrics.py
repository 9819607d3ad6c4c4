"""Session-based usage measures.

Covers per-day descriptive statistics, cluster-level statistics, the
rate of repeated sessions (RRS), per-user fragmentation trend tests,
the discriminant weighted regression, and the community activity
heatmap matrix.

Daily rows exist only for (user, day) pairs with at least one session:
days without usage are treated as absent, not as zeros (the trend test
can optionally re-insert them as zeros). The trend test regresses daily
session counts on the calendar day over the first window of three
consecutive calendar months that each contain 10 or more active days. The discriminant statistic simplifies the multilevel design to
weighted least squares; with a single predictor the squared semi-partial
correlation it reports equals the weighted squared correlation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats as sstats

from .cluster import ClusterSummary, UserClusterResult
from .errors import DegenerateInput, DomainError, Ineligible, NoClusters
from .sessionize import Session

INCREASE = "increase"
DECREASE = "decrease"
NO_CHANGE = "no_change"

DEFAULT_ALPHA = 0.05
DEFAULT_BIN_S = 900
DEFAULT_HIST_BINS = 30
_LOG_FLOOR = 1e-6


# ---------------------------------------------------------------------------
# daily descriptive statistics


@dataclass(frozen=True)
class DailyUsage:
    user_id: str
    day_key: date
    total_minutes: float
    n_sessions: int
    mean_session_minutes: float


@dataclass(frozen=True)
class Histogram:
    """Log-spaced histogram of a positive-valued quantity."""

    edges: np.ndarray
    counts: np.ndarray
    n_zero: int


@dataclass(frozen=True)
class DailyStatsResult:
    rows: tuple[DailyUsage, ...]
    summary: dict
    histograms: dict[str, Histogram]


def daily_stats(sessions: Iterable[Session]) -> DailyStatsResult:
    """Per-(user, day) usage rows plus sample-level aggregates.

    A session is attributed to the calendar day it starts on, with its
    full duration, so daily totals above 1440 minutes are possible.
    """
    acc: dict[tuple[str, date], list[float]] = {}
    for s in sessions:
        acc.setdefault((s.user_id, s.day_key), []).append(s.duration_s / 60.0)
    rows = tuple(
        DailyUsage(
            user_id=uid,
            day_key=day,
            total_minutes=sum(mins),
            n_sessions=len(mins),
            mean_session_minutes=sum(mins) / len(mins),
        )
        for (uid, day), mins in sorted(acc.items())
    )
    totals = np.array([r.total_minutes for r in rows])
    counts = np.array([float(r.n_sessions) for r in rows])
    means = np.array([r.mean_session_minutes for r in rows])
    summary = {
        "n_user_days": len(rows),
        "n_users": len({r.user_id for r in rows}),
        "total_minutes": four_numbers(totals),
        "n_sessions": four_numbers(counts),
        "mean_session_minutes": four_numbers(means),
    }
    histograms = {
        "total_minutes": log_histogram(totals),
        "n_sessions": log_histogram(counts),
        "mean_session_minutes": log_histogram(means),
    }
    return DailyStatsResult(rows, summary, histograms)


def four_numbers(values: np.ndarray) -> dict:
    if len(values) == 0:
        return {"mean": None, "median": None, "min": None, "max": None}
    return {
        "mean": float(values.mean()),
        "median": float(np.median(values)),
        "min": float(values.min()),
        "max": float(values.max()),
    }


def log_histogram(values: np.ndarray, n_bins: int = DEFAULT_HIST_BINS) -> Histogram:
    """Histogram with log-spaced bins over the positive values.

    Zeros (and negatives, which should not occur) are counted apart since
    they have no place on a log axis.
    """
    values = np.asarray(values, dtype=float)
    pos = values[values > 0.0]
    n_zero = int(len(values) - len(pos))
    if len(pos) == 0:
        return Histogram(np.empty(0), np.empty(0, dtype=int), n_zero)
    lo, hi = float(pos.min()), float(pos.max())
    if lo == hi:
        return Histogram(np.array([lo, hi]), np.array([len(pos)]), n_zero)
    edges = np.logspace(math.log10(lo), math.log10(hi), n_bins + 1)
    edges[0], edges[-1] = lo, hi
    counts, _ = np.histogram(pos, bins=edges)
    return Histogram(edges, counts.astype(int), n_zero)


# ---------------------------------------------------------------------------
# cluster-level statistics


@dataclass(frozen=True)
class ClusterStatsRow:
    user_id: str
    n_clusters: int
    mean_size: float
    median_size: float
    modularity: float


@dataclass(frozen=True)
class ClusterStatsResult:
    rows: tuple[ClusterStatsRow, ...]
    summary: dict
    histogram: Histogram


def cluster_stats(results: Iterable[UserClusterResult]) -> ClusterStatsResult:
    """Per-user cluster counts and sizes, aggregated over the sample.

    Only non-noise clusters (size >= 2) enter the counts; users left with
    zero clusters are excluded from the rows and counted separately.
    """
    rows = []
    n_without = 0
    for res in sorted(results, key=lambda r: r.user_id):
        sizes = np.array([c.size for c in res.clusters], dtype=float)
        if len(sizes) == 0:
            n_without += 1
            continue
        rows.append(
            ClusterStatsRow(
                user_id=res.user_id,
                n_clusters=len(sizes),
                mean_size=float(sizes.mean()),
                median_size=float(np.median(sizes)),
                modularity=res.modularity,
            )
        )
    counts = np.array([float(r.n_clusters) for r in rows])
    summary = {
        "n_users": len(rows),
        "n_users_without_clusters": n_without,
        "n_clusters": four_numbers(counts),
        "mean_size": four_numbers(np.array([r.mean_size for r in rows])),
        "median_size": four_numbers(np.array([r.median_size for r in rows])),
        "modularity": four_numbers(np.array([r.modularity for r in rows])),
    }
    return ClusterStatsResult(tuple(rows), summary, log_histogram(counts))


# ---------------------------------------------------------------------------
# rate of repeated sessions


def rrs(
    clusters: Sequence[ClusterSummary],
    n_active_days: int,
    min_cluster_size: int = 1,
) -> float:
    """Rate of repeated sessions: mean fraction of active days covered.

    For each retained cluster j, n_j is the number of days on which the
    cluster has at least one session; the result is sum(n_j) / (J * N)
    with J the number of retained clusters and N the user's active days.
    Noise clusters must not be passed in; clusters smaller than
    ``min_cluster_size`` are dropped (10 reproduces the large-cluster
    variant).
    """
    if n_active_days < 1:
        raise DomainError("n_active_days must be at least 1")
    retained = [c for c in clusters if c.size >= min_cluster_size]
    if not retained:
        raise NoClusters(
            f"no clusters of size >= {min_cluster_size} (had {len(clusters)})"
        )
    covered = sum(c.n_session_days for c in retained)
    return covered / (len(retained) * n_active_days)


# ---------------------------------------------------------------------------
# fragmentation trend


@dataclass(frozen=True)
class TrendResult:
    user_id: str
    slope: float
    p_value: float
    classification: str
    n_days_used: int


def trend(
    day_counts: Mapping[date, int],
    *,
    user_id: str = "",
    alpha: float = DEFAULT_ALPHA,
    min_days_per_month: int = 10,
    months_required: int = 3,
    include_zero_days: bool = False,
) -> TrendResult:
    """Test one user's change in daily session counts over time.

    Eligibility requires ``months_required`` consecutive calendar months
    with at least ``min_days_per_month`` active days each; the earliest
    such window is used. Days without sessions are absent by default;
    ``include_zero_days`` re-inserts every calendar day of the window as
    a zero-count observation instead (eligibility still counts active
    days only). Raises Ineligible when no window qualifies.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    window = _eligible_window(
        sorted(day_counts), min_days_per_month, months_required
    )
    if window is None:
        raise Ineligible(
            f"no {months_required} consecutive months with "
            f">= {min_days_per_month} active days"
        )
    if include_zero_days:
        first = date(window[0][0], window[0][1], 1)
        last_month_end = _next_month(window[1])
        last = date(last_month_end[0], last_month_end[1], 1) - timedelta(days=1)
        days = [first + timedelta(days=i) for i in range((last - first).days + 1)]
        y = np.array([float(day_counts.get(d, 0)) for d in days])
    else:
        days = [
            d for d in sorted(day_counts) if window[0] <= (d.year, d.month) <= window[1]
        ]
        y = np.array([float(day_counts[d]) for d in days])
    x = np.array([d.toordinal() for d in days], dtype=float)
    x -= x[0]

    slope, p_value = _ols_slope_test(x, y)
    if slope > 0 and p_value < alpha:
        cls = INCREASE
    elif slope < 0 and p_value < alpha:
        cls = DECREASE
    else:
        cls = NO_CHANGE
    return TrendResult(user_id, slope, p_value, cls, len(days))


def _eligible_window(
    days: Sequence[date], min_days_per_month: int, months_required: int
) -> tuple[tuple[int, int], tuple[int, int]] | None:
    per_month: dict[tuple[int, int], int] = {}
    for d in days:
        key = (d.year, d.month)
        per_month[key] = per_month.get(key, 0) + 1
    qualifying = sorted(k for k, n in per_month.items() if n >= min_days_per_month)
    run: list[tuple[int, int]] = []
    for month in qualifying:
        if run and _next_month(run[-1]) != month:
            run = []
        run.append(month)
        if len(run) == months_required:
            return run[0], run[-1]
    return None


def _next_month(month: tuple[int, int]) -> tuple[int, int]:
    y, m = month
    return (y + 1, 1) if m == 12 else (y, m + 1)


def _ols_slope_test(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of y on x and its two-sided t-test p-value."""
    n = len(x)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0 or n < 3:
        raise DegenerateInput("slope test needs >= 3 points with distinct x")
    slope = float(xc @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * xc
    rss = float(resid @ resid)
    se = math.sqrt(rss / (n - 2) / sxx)
    if se == 0.0:
        return slope, (1.0 if slope == 0.0 else 0.0)
    t = slope / se
    p = 2.0 * float(sstats.t.sf(abs(t), df=n - 2))
    return slope, p


def trend_for_users(
    rows: Iterable[DailyUsage],
    *,
    alpha: float = DEFAULT_ALPHA,
    min_days_per_month: int = 10,
    months_required: int = 3,
    include_zero_days: bool = False,
) -> tuple[list[TrendResult], dict]:
    """Run the trend test per user and summarize the class shares.

    Ineligible users are excluded from the shares and only counted.
    """
    by_user: dict[str, dict[date, int]] = {}
    for r in rows:
        by_user.setdefault(r.user_id, {})[r.day_key] = r.n_sessions
    results: list[TrendResult] = []
    n_ineligible = 0
    for uid in sorted(by_user):
        try:
            results.append(
                trend(
                    by_user[uid],
                    user_id=uid,
                    alpha=alpha,
                    min_days_per_month=min_days_per_month,
                    months_required=months_required,
                    include_zero_days=include_zero_days,
                )
            )
        except Ineligible:
            n_ineligible += 1
    n = len(results)
    shares = {
        INCREASE: sum(r.classification == INCREASE for r in results) / n if n else None,
        DECREASE: sum(r.classification == DECREASE for r in results) / n if n else None,
        NO_CHANGE: sum(r.classification == NO_CHANGE for r in results) / n if n else None,
    }
    summary = {
        "alpha": alpha,
        "n_eligible": n,
        "n_ineligible": n_ineligible,
        "shares": shares,
    }
    return results, summary


# ---------------------------------------------------------------------------
# discriminant weighted regression


def discriminant(rows: Sequence[DailyUsage], log_transform: bool = False) -> float:
    """Squared semi-partial correlation of daily minutes on session count.

    Weighted least squares with each user-day weighted by that user's
    active-day count; with a single predictor the squared semi-partial
    equals the weighted squared correlation, which is what is returned.
    ``log_transform`` takes natural logs of both variables (floored at
    1e-6).
    """
    if len(rows) < 3:
        raise DegenerateInput("need at least 3 user-days")
    active_days: dict[str, int] = {}
    for r in rows:
        active_days[r.user_id] = active_days.get(r.user_id, 0) + 1
    x = np.array([float(r.n_sessions) for r in rows])
    y = np.array([r.total_minutes for r in rows])
    w = np.array([float(active_days[r.user_id]) for r in rows])
    if log_transform:
        x = np.log(np.maximum(x, _LOG_FLOOR))
        y = np.log(np.maximum(y, _LOG_FLOOR))
    wsum = w.sum()
    xc = x - (w @ x) / wsum
    yc = y - (w @ y) / wsum
    sxx = float(w @ (xc * xc))
    syy = float(w @ (yc * yc))
    if sxx == 0.0:
        raise DegenerateInput("predictor (session count) has zero variance")
    if syy == 0.0:
        return 0.0
    sxy = float(w @ (xc * yc))
    return (sxy * sxy) / (sxx * syy)


# ---------------------------------------------------------------------------
# community heatmap


@dataclass(frozen=True)
class HeatmapMatrix:
    """Mean fraction of each time bin covered by sessions, per community.

    Rows follow ``community_ids``; ``values[i, j]`` is the coverage of
    bin j averaged over all active user-days of community i's members.
    """

    community_ids: tuple[int, ...]
    community_sizes: tuple[int, ...]
    bin_s: int
    values: np.ndarray

    def bin_labels(self) -> list[str]:
        return [
            f"{(b * self.bin_s) // 3600:02d}:{((b * self.bin_s) % 3600) // 60:02d}"
            for b in range(self.values.shape[1])
        ]


def heatmap(
    sessions: Iterable[Session],
    membership: Mapping[str, int],
    bin_s: int = DEFAULT_BIN_S,
) -> HeatmapMatrix:
    """Aggregate session coverage into a community x time-bin matrix.

    Sessions wrapping midnight contribute to the bins they cover on the
    clock, on their start day's row. Durations are capped at 24 h (a
    longer session saturates every bin once) and cells are clipped to 1
    where wrapped sessions of the same day overlap on the clock.
    """
    if bin_s <= 0 or 86400 % bin_s != 0:
        raise DomainError("bin_s must be a positive divisor of 86400")
    n_bins = 86400 // bin_s

    day_cov: dict[tuple[str, date], np.ndarray] = {}
    for s in sessions:
        if s.user_id not in membership:
            continue
        key = (s.user_id, s.day_key)
        cov = day_cov.get(key)
        if cov is None:
            cov = day_cov[key] = np.zeros(n_bins)
        _add_coverage(cov, s.start_sod, min(s.duration_s, 86400.0), bin_s)

    community_ids = sorted(set(membership.values()))
    sizes = {c: 0 for c in community_ids}
    for uid in membership:
        sizes[membership[uid]] += 1

    sums = {c: np.zeros(n_bins) for c in community_ids}
    n_days = {c: 0 for c in community_ids}
    for (uid, _), cov in day_cov.items():
        c = membership[uid]
        sums[c] += np.minimum(cov, float(bin_s))
        n_days[c] += 1

    values = np.zeros((len(community_ids), n_bins))
    for i, c in enumerate(community_ids):
        if n_days[c] > 0:
            values[i] = sums[c] / (n_days[c] * bin_s)
    return HeatmapMatrix(
        tuple(community_ids),
        tuple(sizes[c] for c in community_ids),
        bin_s,
        values,
    )


def _add_coverage(cov: np.ndarray, start_sod: float, duration_s: float, bin_s: int) -> None:
    """Add overlapped seconds per bin for [start, start+duration) on the clock."""
    remaining = duration_s
    a = start_sod
    while remaining > 0.0:
        span = min(remaining, 86400.0 - a)
        _add_linear(cov, a, a + span, bin_s)
        remaining -= span
        a = 0.0


def _add_linear(cov: np.ndarray, a: float, b: float, bin_s: int) -> None:
    first = int(a // bin_s)
    last = int(math.ceil(b / bin_s)) - 1
    for k in range(first, min(last, len(cov) - 1) + 1):
        lo = max(a, k * bin_s)
        hi = min(b, (k + 1) * bin_s)
        if hi > lo:
            cov[k] += hi - lo
