"""Command-line pipeline: raw logs -> sessions -> clusters -> communities
-> metrics, with file-based hand-off between stages.

Every stage reads the documented CSV artifacts of the stage before it
and writes its own, so stages can be re-run independently. All
randomness derives from the single configured seed. Exit codes: 0 on
success, 1 on a fatal input error, 2 on invalid flags or configuration.
"""

from __future__ import annotations

import functools
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import cluster as cluster_mod
from . import metrics, storage, synth
from .config import PipelineConfig, load_config
from .errors import SessionKitError
from .ingest import load_events, iter_log_lines
from .sessionize import build_sessions

FORMATS = click.Choice(["csv", "json"])

# Typical values observed on multi-thousand-user smartphone corpora;
# echoed in report summaries so desk-scale runs can be sanity-checked
# against the expected order of magnitude.
REFERENCE_NOTE = "typical values on multi-thousand-user smartphone corpora"
DAILY_REFERENCE = {
    "note": REFERENCE_NOTE,
    "total_minutes": {"mean": 175, "median": 97},
    "n_sessions": {"mean": 24, "median": 18},
    "mean_session_minutes": {"mean": 17, "median": 4},
}
CLUSTER_REFERENCE = {
    "note": REFERENCE_NOTE,
    "n_clusters": {"mean": 13, "median": 12},
    "modularity": {"mean": 0.77, "median": 0.78},
}
TREND_REFERENCE = {
    "note": REFERENCE_NOTE,
    "shares": {"increase": 0.19, "decrease": 0.38, "no_change": 0.47},
}
DISCRIMINANT_REFERENCE = {
    "note": REFERENCE_NOTE,
    "sr_squared_raw": 0.018,
    "sr_squared_log": 0.284,
}
COMMUNITY_REFERENCE = {"note": REFERENCE_NOTE, "modularity": 0.83}


def _fatal_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (SessionKitError, OSError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _resolve_config(config_path: str | None, **overrides) -> PipelineConfig:
    try:
        cfg = load_config(config_path) if config_path else PipelineConfig()
        for key, value in overrides.items():
            if value is not None:
                setattr(cfg, key, value)
        cfg.validate()
    except SessionKitError as exc:
        raise click.UsageError(str(exc)) from exc
    return cfg


def _out_dir(path: str | None, cfg: PipelineConfig) -> Path:
    resolved = path or cfg.out_dir
    if not resolved:
        raise click.UsageError("no --out given and no out_dir in the config file")
    out = Path(resolved)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _in_paths(paths: tuple[str, ...], cfg: PipelineConfig) -> list[str]:
    if paths:
        return list(paths)
    if cfg.in_path:
        return [cfg.in_path]
    raise click.UsageError("no --in given and no in_path in the config file")


def _default_threads() -> int:
    return os.cpu_count() or 1


@click.group()
def main():
    """Session-based analysis of mobile-device event logs."""


# ---------------------------------------------------------------------------
# stage implementations (shared by the subcommands and `pipeline`)


def run_sessionize(cfg: PipelineConfig, in_paths: list[str], out: Path) -> None:
    timelines, ingest_stats = load_events(iter_log_lines(in_paths))
    all_sessions = []
    totals = {"sessions_built": 0, "aborted_wakeups": 0,
              "unterminated_dropped": 0, "sessions_over_24h": 0, "n_users": 0}
    for timeline in timelines:
        sessions, st = build_sessions(timeline, cfg.tz_offset_s)
        all_sessions.extend(sessions)
        totals["sessions_built"] += st.sessions_built
        totals["aborted_wakeups"] += st.aborted_wakeups
        totals["unterminated_dropped"] += st.unterminated_dropped
        totals["sessions_over_24h"] += st.sessions_over_24h
        totals["n_users"] += 1
    storage.write_sessions_csv(out / "sessions.csv", all_sessions)
    storage.write_json(out / "ingest-stats.json", ingest_stats.to_dict())
    storage.write_json(out / "sessionize-stats.json", totals)
    click.echo(f"wrote {out / 'sessions.csv'} ({totals['sessions_built']} sessions)")


def run_stats(
    cfg: PipelineConfig,
    sessions_path: str | Path,
    clusters_path: str | Path | None,
    out: Path,
    fmt: str,
) -> None:
    sessions = storage.read_sessions_csv(sessions_path)
    result = metrics.daily_stats(sessions)
    daily_rows = (
        (r.user_id, r.day_key, r.total_minutes, r.n_sessions, r.mean_session_minutes)
        for r in result.rows
    )
    daily_header = ["user_id", "day_key", "total_minutes", "n_sessions", "mean_session_minutes"]
    if fmt == "json":
        storage.rows_to_json(out / "daily_stats.json", daily_header, daily_rows)
    else:
        storage.write_daily_csv(out / "daily_stats.csv", result.rows)
    storage.write_json(
        out / "daily-summary.json", {**result.summary, "reference": DAILY_REFERENCE}
    )
    for name, hist in result.histograms.items():
        storage.write_hist_csv(out / f"hist-{name.replace('_', '-')}.csv", hist)

    if clusters_path is not None:
        cluster_rows = storage.read_clusters_csv(clusters_path)
        stats = _cluster_stats_from_rows(cluster_rows)
        storage.write_cluster_stats_csv(out / "cluster-stats.csv", stats.rows)
        storage.write_json(
            out / "cluster-stats.json", {**stats.summary, "reference": CLUSTER_REFERENCE}
        )
        storage.write_hist_csv(out / "hist-n-clusters.csv", stats.histogram)
    click.echo(f"wrote stats for {result.summary['n_user_days']} user-days to {out}")


def _cluster_stats_from_rows(rows: list[storage.ClusterRow]) -> metrics.ClusterStatsResult:
    by_user: dict[str, list[storage.ClusterRow]] = {}
    for r in rows:
        by_user.setdefault(r.user_id, []).append(r)
    out_rows = []
    n_without = 0
    for uid in sorted(by_user):
        sizes = np.array([r.size for r in by_user[uid] if not r.is_noise], dtype=float)
        if len(sizes) == 0:
            n_without += 1
            continue
        out_rows.append(
            metrics.ClusterStatsRow(
                user_id=uid,
                n_clusters=len(sizes),
                mean_size=float(sizes.mean()),
                median_size=float(np.median(sizes)),
                modularity=by_user[uid][0].modularity,
            )
        )
    counts = np.array([float(r.n_clusters) for r in out_rows])
    summary = {
        "n_users": len(out_rows),
        "n_users_without_clusters": n_without,
        "n_clusters": metrics.four_numbers(counts),
        "mean_size": metrics.four_numbers(np.array([r.mean_size for r in out_rows])),
        "median_size": metrics.four_numbers(np.array([r.median_size for r in out_rows])),
        "modularity": metrics.four_numbers(np.array([r.modularity for r in out_rows])),
    }
    return metrics.ClusterStatsResult(tuple(out_rows), summary, metrics.log_histogram(counts))


def _cluster_worker(args):
    sessions, kwargs = args
    return cluster_mod.cluster_sessions(sessions, **kwargs)


def run_cluster(
    cfg: PipelineConfig,
    sessions_path: str | Path,
    out: Path,
    graph_out: bool,
    threads: int,
) -> None:
    sessions = storage.read_sessions_csv(sessions_path)
    by_user: dict[str, list] = {}
    for s in sessions:
        by_user.setdefault(s.user_id, []).append(s)
    users = sorted(by_user)
    kwargs = dict(
        epsilon_s=cfg.epsilon_s,
        knn_k=cfg.knn_k,
        knn_threshold=cfg.knn_threshold,
        seed=cfg.stage_seed("cluster"),
    )
    if threads > 1 and len(users) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_cluster_worker, [(by_user[u], kwargs) for u in users]))
    else:
        results = [cluster_mod.cluster_sessions(by_user[u], **kwargs) for u in users]
    storage.write_clusters_csv(out / "clusters.csv", results)

    if graph_out:
        from .circular import sod_matrix
        from .graphs import build_session_graph

        graph_dir = out / "graphs"
        graph_dir.mkdir(parents=True, exist_ok=True)
        for uid in users:
            g = build_session_graph(
                sod_matrix(sorted(by_user[uid], key=lambda s: s.session_id)),
                epsilon_s=cfg.epsilon_s,
                knn_k=cfg.knn_k,
                knn_threshold=cfg.knn_threshold,
            )
            safe = "".join(ch if ch.isalnum() else "_" for ch in uid)
            storage.write_csv(graph_dir / f"{safe}.csv", ["u", "v", "w"], g.edges())
    click.echo(f"wrote {out / 'clusters.csv'} for {len(users)} users")


def run_communities(cfg: PipelineConfig, clusters_path: str | Path, out: Path) -> None:
    rows = storage.read_clusters_csv(clusters_path)
    # profiles only need centroid coordinates, so ClusterRow works as-is
    profiles: dict[str, list] = {}
    for r in rows:
        profiles.setdefault(r.user_id, [])
        if not r.is_noise:
            profiles[r.user_id].append(r)
    result = cluster_mod.detect_user_communities(
        profiles,
        epsilon_s=cfg.epsilon_s,
        seed=cfg.stage_seed("communities"),
        min_report_size=cfg.min_report_size,
    )
    storage.write_communities_csv(out / "communities.csv", result)
    summary = storage.community_summary_dict(result)
    summary["reference"] = COMMUNITY_REFERENCE
    storage.write_json(out / "community-summary.json", summary)
    click.echo(
        f"wrote {out / 'communities.csv'}: {len(result.communities)} communities, "
        f"modularity {result.modularity:.4f}"
    )


def run_rrs(
    cfg: PipelineConfig,
    clusters_path: str | Path,
    sessions_path: str | Path,
    out: Path,
    min_size: int,
    fmt: str,
) -> None:
    cluster_rows = storage.read_clusters_csv(clusters_path)
    sessions = storage.read_sessions_csv(sessions_path)
    active_days: dict[str, set] = {}
    for s in sessions:
        active_days.setdefault(s.user_id, set()).add(s.day_key)

    by_user: dict[str, list[storage.ClusterRow]] = {}
    for r in cluster_rows:
        if not r.is_noise:
            by_user.setdefault(r.user_id, []).append(r)

    rows = []
    skipped = []
    for uid in sorted(set(r.user_id for r in cluster_rows)):
        if uid not in active_days:
            raise storage.BadArtifact(
                f"{clusters_path}: user {uid} has clusters but no sessions in {sessions_path}"
            )
        retained = [r for r in by_user.get(uid, []) if r.size >= min_size]
        if not retained:
            skipped.append(uid)
            continue
        n = len(active_days[uid])
        value = sum(r.n_session_days for r in retained) / (len(retained) * n)
        rows.append((uid, value, len(retained), n))

    header = ["user_id", "rrs", "n_clusters_used", "n_active_days"]
    if fmt == "json":
        storage.rows_to_json(out / "rrs.json", header, rows)
    else:
        storage.write_csv(out / "rrs.csv", header, rows)
    values = np.array([r[1] for r in rows])
    storage.write_json(
        out / "rrs-summary.json",
        {
            "min_cluster_size": min_size,
            "n_users": len(rows),
            "skipped_users": skipped,
            "rrs": metrics.four_numbers(values),
            "reference": {
                "note": REFERENCE_NOTE,
                "mean_all_clusters": 0.48,
                "mean_large_clusters_10_plus": 0.60,
            },
        },
    )
    click.echo(f"wrote RRS for {len(rows)} users to {out}")


def run_trend(
    cfg: PipelineConfig,
    sessions_path: str | Path,
    out: Path,
    fmt: str,
    include_zero_days: bool = False,
) -> None:
    sessions = storage.read_sessions_csv(sessions_path)
    daily = metrics.daily_stats(sessions)
    results, summary = metrics.trend_for_users(
        daily.rows, alpha=cfg.trend_alpha, include_zero_days=include_zero_days
    )
    if fmt == "json":
        storage.rows_to_json(
            out / "trend.json",
            ["user_id", "slope", "p_value", "classification", "n_days_used"],
            ((r.user_id, r.slope, r.p_value, r.classification, r.n_days_used) for r in results),
        )
    else:
        storage.write_trend_csv(out / "trend.csv", results)
    storage.write_json(out / "trend-summary.json", {**summary, "reference": TREND_REFERENCE})
    click.echo(
        f"trend: {summary['n_eligible']} eligible, {summary['n_ineligible']} ineligible"
    )


def run_discriminant(cfg: PipelineConfig, sessions_path: str | Path, out: Path) -> None:
    sessions = storage.read_sessions_csv(sessions_path)
    daily = metrics.daily_stats(sessions)
    payload = {
        "method": (
            "weighted least squares of daily minutes on daily session count, "
            "weighted by the user's active-day count; with a single predictor "
            "the squared semi-partial correlation equals the weighted r-squared"
        ),
        "n_user_days": len(daily.rows),
        "sr_squared_raw": metrics.discriminant(daily.rows, log_transform=False),
        "sr_squared_log": metrics.discriminant(daily.rows, log_transform=True),
        "reference": DISCRIMINANT_REFERENCE,
    }
    storage.write_json(out / "discriminant.json", payload)
    click.echo(f"wrote {out / 'discriminant.json'}")


def run_heatmap(
    cfg: PipelineConfig,
    sessions_path: str | Path,
    communities_path: str | Path,
    out: Path,
) -> None:
    sessions = storage.read_sessions_csv(sessions_path)
    membership = storage.read_communities_csv(communities_path)
    hm = metrics.heatmap(sessions, membership, bin_s=cfg.heatmap_bin_s)
    storage.write_heatmap_csv(out / "heatmap.csv", hm)
    labels = hm.bin_labels()
    storage.write_json(
        out / "heatmap-summary.json",
        {
            "bin_s": hm.bin_s,
            "n_bins": hm.values.shape[1],
            "n_communities": len(hm.community_ids),
            "communities": [
                {
                    "community_id": cid,
                    "size": hm.community_sizes[i],
                    "peak_bin": labels[int(np.argmax(hm.values[i]))],
                    "peak_coverage": float(hm.values[i].max()),
                    "mean_coverage": float(hm.values[i].mean()),
                }
                for i, cid in enumerate(hm.community_ids)
            ],
        },
    )
    click.echo(f"wrote {out / 'heatmap.csv'} ({len(hm.community_ids)} communities)")


def run_synth(
    cfg: PipelineConfig,
    archetypes: list[str],
    users: int,
    days: int,
    noise_rate: float,
    out: Path,
) -> None:
    base_seed = cfg.stage_seed("synth")
    truth: dict = {"seed": cfg.seed, "days": days, "users": {}}
    for i in range(users):
        name = archetypes[i % len(archetypes)]
        spec = synth.make_archetype(name, days, cfg.tz_offset_s)
        uid = f"u{i:04d}"
        gen = synth.gen_user_logs(spec, uid, base_seed + i, noise_rate_per_hour=noise_rate)
        (out / f"{uid}.log").write_text("\n".join(gen.lines) + "\n", encoding="utf-8")
        truth["users"][uid] = {
            "archetype": name,
            "sessions": [[s.start_ms, s.end_ms] for s in gen.planted],
        }
    storage.write_json(out / "ground-truth.json", truth)
    click.echo(f"wrote {users} user logs to {out}")


# ---------------------------------------------------------------------------
# subcommands


_config_opt = click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                           help="Flat key = value config file; flags override it.")


@main.command()
@_config_opt
@click.option("--in", "in_paths", multiple=True,
              type=click.Path(), help="Log file or directory (repeatable).")
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--tz-offset-s", type=int, default=None)
@_fatal_errors
def sessionize(config_path, in_paths, out_path, tz_offset_s):
    """Parse raw logs and extract unlock-to-lock sessions."""
    cfg = _resolve_config(config_path, tz_offset_s=tz_offset_s)
    run_sessionize(cfg, _in_paths(in_paths, cfg), _out_dir(out_path, cfg))


@main.command()
@_config_opt
@click.option("--sessions", "sessions_path", required=True, type=click.Path())
@click.option("--clusters", "clusters_path", default=None, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--format", "fmt", type=FORMATS, default="csv")
@_fatal_errors
def stats(config_path, sessions_path, clusters_path, out_path, fmt):
    """Daily usage statistics (and cluster statistics, given clusters)."""
    cfg = _resolve_config(config_path)
    run_stats(cfg, sessions_path, clusters_path, _out_dir(out_path, cfg), fmt)


@main.command()
@_config_opt
@click.option("--sessions", "sessions_path", required=True, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--epsilon-s", type=float, default=None)
@click.option("--knn-k", type=int, default=None)
@click.option("--knn-threshold", type=int, default=None)
@click.option("--graph-out", is_flag=True, default=False,
              help="Also write per-user graph edge lists (u,v,w).")
@click.option("--threads", type=int, default=None, envvar="SESSIONKIT_THREADS")
@_fatal_errors
def cluster(config_path, sessions_path, out_path, seed, epsilon_s, knn_k, knn_threshold,
            graph_out, threads):
    """Cluster each user's sessions by recurring clock time."""
    cfg = _resolve_config(config_path, seed=seed, epsilon_s=epsilon_s,
                          knn_k=knn_k, knn_threshold=knn_threshold)
    run_cluster(cfg, sessions_path, _out_dir(out_path, cfg), graph_out,
                threads or _default_threads())


@main.command()
@_config_opt
@click.option("--clusters", "clusters_path", required=True, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--min-report-size", type=int, default=None)
@_fatal_errors
def communities(config_path, clusters_path, out_path, seed, min_report_size):
    """Detect communities of users with similar session-cluster profiles."""
    cfg = _resolve_config(config_path, seed=seed, min_report_size=min_report_size)
    run_communities(cfg, clusters_path, _out_dir(out_path, cfg))


@main.command()
@_config_opt
@click.option("--clusters", "clusters_path", required=True, type=click.Path())
@click.option("--sessions", "sessions_path", default=None, type=click.Path(),
              help="sessions.csv for active-day counts; defaults to the file "
                   "next to the clusters file.")
@click.option("--min-size", type=int, default=None,
              help="Keep only clusters with at least this many sessions.")
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--format", "fmt", type=FORMATS, default="csv")
@_fatal_errors
def rrs(config_path, clusters_path, sessions_path, min_size, out_path, fmt):
    """Rate of repeated sessions per user."""
    cfg = _resolve_config(config_path, min_cluster_size_for_rrs=min_size)
    if sessions_path is None:
        sessions_path = Path(clusters_path).parent / "sessions.csv"
        if not Path(sessions_path).exists():
            raise click.UsageError(
                f"no --sessions given and {sessions_path} does not exist"
            )
    run_rrs(cfg, clusters_path, sessions_path, _out_dir(out_path, cfg),
            cfg.min_cluster_size_for_rrs, fmt)


@main.command()
@_config_opt
@click.option("--sessions", "sessions_path", required=True, type=click.Path())
@click.option("--alpha", type=float, default=None)
@click.option("--include-zero-days", is_flag=True, default=False,
              help="Insert zero counts for days without sessions in the window.")
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--format", "fmt", type=FORMATS, default="csv")
@_fatal_errors
def trend(config_path, sessions_path, alpha, include_zero_days, out_path, fmt):
    """Per-user trend in daily session counts (fragmentation test)."""
    cfg = _resolve_config(config_path, trend_alpha=alpha)
    run_trend(cfg, sessions_path, _out_dir(out_path, cfg), fmt, include_zero_days)


@main.command()
@_config_opt
@click.option("--sessions", "sessions_path", required=True, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path())
@_fatal_errors
def discriminant(config_path, sessions_path, out_path):
    """Weighted regression of daily minutes on daily session count."""
    cfg = _resolve_config(config_path)
    run_discriminant(cfg, sessions_path, _out_dir(out_path, cfg))


@main.command()
@_config_opt
@click.option("--sessions", "sessions_path", required=True, type=click.Path())
@click.option("--communities", "communities_path", required=True, type=click.Path())
@click.option("--bin-s", type=int, default=None)
@click.option("--out", "out_path", default=None, type=click.Path())
@_fatal_errors
def heatmap(config_path, sessions_path, communities_path, bin_s, out_path):
    """Community x time-of-day activity matrix."""
    cfg = _resolve_config(config_path, heatmap_bin_s=bin_s)
    run_heatmap(cfg, sessions_path, communities_path, _out_dir(out_path, cfg))


@main.command("synth")
@_config_opt
@click.option("--archetype", "archetypes", multiple=True, required=True,
              type=click.Choice(sorted(synth.ARCHETYPES)),
              help="Archetype name; repeat to mix (users assigned round-robin).")
@click.option("--users", type=int, required=True)
@click.option("--days", type=int, required=True)
@click.option("--seed", type=int, default=None)
@click.option("--noise-rate", type=float, default=synth.DEFAULT_NOISE_RATE_PER_HOUR,
              help="Machine-noise events per hour.")
@click.option("--tz-offset-s", type=int, default=None)
@click.option("--out", "out_path", default=None, type=click.Path())
@_fatal_errors
def synth_cmd(config_path, archetypes, users, days, seed, noise_rate, tz_offset_s, out_path):
    """Generate synthetic logs with known ground truth."""
    if users < 1 or days < 1:
        raise click.UsageError("--users and --days must be positive")
    cfg = _resolve_config(config_path, seed=seed, tz_offset_s=tz_offset_s)
    run_synth(cfg, list(archetypes), users, days, noise_rate, _out_dir(out_path, cfg))


@main.command()
@_config_opt
@click.option("--in", "in_paths", multiple=True, type=click.Path())
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--min-size", "min_size", type=int, default=None,
              help="RRS minimum cluster size.")
@click.option("--threads", type=int, default=None, envvar="SESSIONKIT_THREADS")
@_fatal_errors
def pipeline(config_path, in_paths, out_path, seed, min_size, threads):
    """Run all stages: sessionize, cluster, communities, stats, metrics."""
    cfg = _resolve_config(config_path, seed=seed, min_cluster_size_for_rrs=min_size)
    out = _out_dir(out_path, cfg)
    in_list = _in_paths(in_paths, cfg)
    run_sessionize(cfg, in_list, out)
    sessions_csv = out / "sessions.csv"
    run_cluster(cfg, sessions_csv, out, graph_out=False,
                threads=threads or _default_threads())
    clusters_csv = out / "clusters.csv"
    run_communities(cfg, clusters_csv, out)
    run_stats(cfg, sessions_csv, clusters_csv, out, fmt="csv")
    run_rrs(cfg, clusters_csv, sessions_csv, out, cfg.min_cluster_size_for_rrs, fmt="csv")
    run_trend(cfg, sessions_csv, out, fmt="csv")
    try:
        run_discriminant(cfg, sessions_csv, out)
    except SessionKitError as exc:
        click.echo(f"discriminant skipped: {exc}")
    run_heatmap(cfg, sessions_csv, out / "communities.csv", out)
    click.echo(f"pipeline complete: {out}")


if __name__ == "__main__":
    main()
