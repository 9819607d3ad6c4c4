"""CSV and JSON artifact readers and writers.

Floats are serialized with ``repr`` (shortest round-trip form), so a
value read back with ``float()`` is bit-identical to the one written and
re-running a stage on identical inputs produces byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

from .cluster import CommunityResult, UserClusterResult
from .errors import SessionKitError
from .metrics import (
    ClusterStatsRow,
    DailyUsage,
    HeatmapMatrix,
    Histogram,
    TrendResult,
)
from .sessionize import Session

SESSIONS_HEADER = ["user_id", "session_id", "start_ms", "end_ms", "day_key", "start_sod", "end_sod"]
CLUSTERS_HEADER = [
    "user_id", "cluster_id", "size", "centroid_start_sod", "centroid_end_sod",
    "n_session_days", "modularity", "is_noise",
]
COMMUNITIES_HEADER = ["user_id", "community_id"]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, date):
        return value.isoformat()
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_json(path: str | Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


class BadArtifact(SessionKitError, ValueError):
    """An artifact file does not match its documented schema."""


def _read_rows(path: str | Path, expected_header: Sequence[str]) -> list[dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise BadArtifact(f"{path}: empty file") from None
        if header != list(expected_header):
            raise BadArtifact(
                f"{path}: expected header {','.join(expected_header)}, got {','.join(header)}"
            )
        out = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise BadArtifact(f"{path}:{line_no}: expected {len(header)} fields")
            out.append(dict(zip(header, row)))
        return out


# ---------------------------------------------------------------------------
# sessions


def write_sessions_csv(path: str | Path, sessions: Iterable[Session]) -> None:
    write_csv(
        path,
        SESSIONS_HEADER,
        (
            (s.user_id, s.session_id, s.start_ms, s.end_ms, s.day_key, s.start_sod, s.end_sod)
            for s in sessions
        ),
    )


def read_sessions_csv(path: str | Path) -> list[Session]:
    out = []
    for r in _read_rows(path, SESSIONS_HEADER):
        try:
            out.append(
                Session(
                    user_id=r["user_id"],
                    session_id=int(r["session_id"]),
                    start_ms=int(r["start_ms"]),
                    end_ms=int(r["end_ms"]),
                    day_key=date.fromisoformat(r["day_key"]),
                    start_sod=float(r["start_sod"]),
                    end_sod=float(r["end_sod"]),
                )
            )
        except ValueError as exc:
            raise BadArtifact(f"{path}: bad session row {r}: {exc}") from None
    return out


# ---------------------------------------------------------------------------
# clusters (summary rows; member ids and day sets are not persisted)


@dataclass(frozen=True)
class ClusterRow:
    user_id: str
    cluster_id: int
    size: int
    centroid_start_sod: float
    centroid_end_sod: float
    n_session_days: int
    modularity: float
    is_noise: bool


def write_clusters_csv(path: str | Path, results: Iterable[UserClusterResult]) -> None:
    def rows():
        for res in results:
            for c in res.clusters:
                yield (res.user_id, c.cluster_id, c.size, c.centroid_start_sod,
                       c.centroid_end_sod, c.n_session_days, res.modularity, 0)
            for c in res.noise:
                yield (res.user_id, c.cluster_id, c.size, c.centroid_start_sod,
                       c.centroid_end_sod, c.n_session_days, res.modularity, 1)

    write_csv(path, CLUSTERS_HEADER, rows())


def read_clusters_csv(path: str | Path) -> list[ClusterRow]:
    out = []
    for r in _read_rows(path, CLUSTERS_HEADER):
        try:
            out.append(
                ClusterRow(
                    user_id=r["user_id"],
                    cluster_id=int(r["cluster_id"]),
                    size=int(r["size"]),
                    centroid_start_sod=float(r["centroid_start_sod"]),
                    centroid_end_sod=float(r["centroid_end_sod"]),
                    n_session_days=int(r["n_session_days"]),
                    modularity=float(r["modularity"]),
                    is_noise=r["is_noise"] == "1",
                )
            )
        except ValueError as exc:
            raise BadArtifact(f"{path}: bad cluster row {r}: {exc}") from None
    return out


# ---------------------------------------------------------------------------
# communities


def write_communities_csv(path: str | Path, result: CommunityResult) -> None:
    write_csv(
        path,
        COMMUNITIES_HEADER,
        ((uid, cid) for uid, cid in sorted(result.memberships.items())),
    )


def read_communities_csv(path: str | Path) -> dict[str, int]:
    out: dict[str, int] = {}
    for r in _read_rows(path, COMMUNITIES_HEADER):
        try:
            out[r["user_id"]] = int(r["community_id"])
        except ValueError as exc:
            raise BadArtifact(f"{path}: bad community row {r}: {exc}") from None
    return out


def community_summary_dict(result: CommunityResult) -> dict:
    return {
        "modularity": result.modularity,
        "min_report_size": result.min_report_size,
        "n_users": len(result.memberships),
        "n_communities": len(result.communities),
        "excluded_users": list(result.excluded_users),
        "communities": [
            {
                "community_id": c.community_id,
                "size": c.size,
                "share": c.share,
                "small": c.small,
            }
            for c in result.communities
        ],
    }


# ---------------------------------------------------------------------------
# metric artifacts


def write_daily_csv(path: str | Path, rows: Iterable[DailyUsage]) -> None:
    write_csv(
        path,
        ["user_id", "day_key", "total_minutes", "n_sessions", "mean_session_minutes"],
        (
            (r.user_id, r.day_key, r.total_minutes, r.n_sessions, r.mean_session_minutes)
            for r in rows
        ),
    )


def write_cluster_stats_csv(path: str | Path, rows: Iterable[ClusterStatsRow]) -> None:
    write_csv(
        path,
        ["user_id", "n_clusters", "mean_size", "median_size", "modularity"],
        ((r.user_id, r.n_clusters, r.mean_size, r.median_size, r.modularity) for r in rows),
    )


def write_trend_csv(path: str | Path, rows: Iterable[TrendResult]) -> None:
    write_csv(
        path,
        ["user_id", "slope", "p_value", "classification", "n_days_used"],
        ((r.user_id, r.slope, r.p_value, r.classification, r.n_days_used) for r in rows),
    )


def write_hist_csv(path: str | Path, hist: Histogram) -> None:
    rows = [
        (float(hist.edges[i]), float(hist.edges[i + 1]), int(hist.counts[i]))
        for i in range(len(hist.counts))
    ]
    if hist.n_zero:
        rows.insert(0, (0.0, 0.0, hist.n_zero))
    write_csv(path, ["bin_left", "bin_right", "count"], rows)


def write_heatmap_csv(path: str | Path, hm: HeatmapMatrix) -> None:
    header = ["community_id", "size"] + hm.bin_labels()
    def rows():
        for i, cid in enumerate(hm.community_ids):
            yield [cid, hm.community_sizes[i]] + [float(v) for v in hm.values[i]]
    write_csv(path, header, rows())


def rows_to_json(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """JSON alternative to a per-row CSV: a list of objects."""
    payload = [
        {k: (v.isoformat() if isinstance(v, date) else v) for k, v in zip(header, row)}
        for row in rows
    ]
    write_json(path, payload)
