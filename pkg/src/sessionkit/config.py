"""Pipeline configuration: defaults, config-file parsing, seed fan-out.

Config files are flat ``key = value`` text, one pair per line; blank
lines and ``#`` comments are allowed. Command-line flags override file
values, which override the defaults below. The single global seed fans
out to per-stage seeds by fixed offsets so stages stay independent but
fully reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import DomainError

STAGE_SEED_OFFSETS = {
    "cluster": 1,
    "communities": 2,
    "synth": 3,
}


@dataclass
class PipelineConfig:
    tz_offset_s: int = 0
    epsilon_s: float = 1.0
    knn_k: int = 50
    knn_threshold: int = 2000
    min_cluster_size_for_rrs: int = 1
    min_report_size: int = 5
    trend_alpha: float = 0.05
    heatmap_bin_s: int = 900
    seed: int = 0
    in_path: str = ""
    out_dir: str = ""

    def validate(self) -> None:
        if self.epsilon_s <= 0:
            raise DomainError("epsilon_s must be positive")
        if self.knn_k < 1:
            raise DomainError("knn_k must be at least 1")
        if self.knn_threshold < 1:
            raise DomainError("knn_threshold must be at least 1")
        if self.min_cluster_size_for_rrs < 1:
            raise DomainError("min_cluster_size_for_rrs must be at least 1")
        if self.min_report_size < 1:
            raise DomainError("min_report_size must be at least 1")
        if not 0.0 < self.trend_alpha < 1.0:
            raise DomainError("trend_alpha must lie in (0, 1)")
        if self.heatmap_bin_s <= 0 or 86400 % self.heatmap_bin_s != 0:
            raise DomainError("heatmap_bin_s must be a positive divisor of 86400")

    def stage_seed(self, stage: str) -> int:
        return self.seed + STAGE_SEED_OFFSETS[stage]


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def load_config(path: str | Path) -> PipelineConfig:
    """Parse a flat key = value config file into a PipelineConfig."""
    cfg = PipelineConfig()
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _FIELD_TYPES:
            raise DomainError(f"{path}:{line_no}: unknown config key {key!r}")
        setattr(cfg, key, _coerce(key, value, line_no, path))
    cfg.validate()
    return cfg


def _coerce(key: str, value: str, line_no: int, path) -> int | float | str:
    kind = _FIELD_TYPES[key]
    try:
        if kind in ("int", int):
            return int(value)
        if kind in ("float", float):
            return float(value)
    except ValueError:
        raise DomainError(f"{path}:{line_no}: bad value for {key}: {value!r}") from None
    return value
