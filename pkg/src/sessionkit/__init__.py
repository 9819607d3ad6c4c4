"""sessionkit: session-based analysis of mobile-device event logs.

Raw event logs are parsed into per-user timelines, sessionized via the
screen-state automaton, clustered by recurring clock time (first
detection round), and aggregated into cross-user communities (second
round). Session-based measures — daily statistics, rate of repeated
sessions, fragmentation trends, the discriminant regression, and the
community heatmap — sit on top. The clustering core is exposed through
scikit-learn style estimators.
"""

from .circular import circ_diff, circ_diff_array, session_distance, sod_matrix, user_distance
from .cluster import (
    ClusterSummary,
    CommunityResult,
    CommunitySummary,
    UserClusterResult,
    cluster_sessions,
    detect_user_communities,
)
from .config import PipelineConfig, load_config
from .errors import (
    DegenerateInput,
    DomainError,
    EmptyGraph,
    EmptyProfile,
    Ineligible,
    InvalidSpec,
    MalformedLine,
    NoClusters,
    SessionKitError,
)
from .estimators import LouvainCommunities, SessionClusterer, UserCommunityDetector
from .graphs import WeightedGraph, build_session_graph, build_user_graph, select_centroid_index
from .ingest import (
    EventKind,
    IngestStats,
    LogEvent,
    UserTimeline,
    format_line,
    load_events,
    parse_line,
)
from .louvain import Partition, louvain, modularity
from .metrics import (
    DailyUsage,
    HeatmapMatrix,
    TrendResult,
    cluster_stats,
    daily_stats,
    discriminant,
    heatmap,
    rrs,
    trend,
    trend_for_users,
)
from .sessionize import Session, SessionizeStats, build_sessions, day_key_of_ms, sod_of_ms
from .synth import ARCHETYPES, ArchetypeSpec, Slot, gen_planted_graph, gen_user_logs, make_archetype

__version__ = "0.1.0"

__all__ = [
    "ARCHETYPES",
    "ArchetypeSpec",
    "ClusterSummary",
    "CommunityResult",
    "CommunitySummary",
    "DailyUsage",
    "DegenerateInput",
    "DomainError",
    "EmptyGraph",
    "EmptyProfile",
    "EventKind",
    "HeatmapMatrix",
    "Ineligible",
    "IngestStats",
    "InvalidSpec",
    "LogEvent",
    "LouvainCommunities",
    "MalformedLine",
    "NoClusters",
    "Partition",
    "PipelineConfig",
    "Session",
    "SessionClusterer",
    "SessionKitError",
    "SessionizeStats",
    "Slot",
    "TrendResult",
    "UserClusterResult",
    "UserCommunityDetector",
    "UserTimeline",
    "WeightedGraph",
    "build_session_graph",
    "build_sessions",
    "build_user_graph",
    "circ_diff",
    "circ_diff_array",
    "cluster_sessions",
    "cluster_stats",
    "daily_stats",
    "day_key_of_ms",
    "detect_user_communities",
    "discriminant",
    "format_line",
    "gen_planted_graph",
    "gen_user_logs",
    "heatmap",
    "load_config",
    "load_events",
    "louvain",
    "make_archetype",
    "modularity",
    "parse_line",
    "rrs",
    "select_centroid_index",
    "session_distance",
    "sod_matrix",
    "sod_of_ms",
    "trend",
    "trend_for_users",
    "user_distance",
]
