"""Parse raw device event logs into per-user, time-ordered event timelines.

Input is line-oriented text, one event per line::

    user_id;timestamp_ms;key[;value]

Recognized keys (``screen_on``, ``keyguard_removed``, ``screen_off``,
``shutdown``) map to their event kinds; anything else becomes an
``OTHER`` event that carries the raw key and, if present, the value.
Blank lines and lines starting with ``#`` are skipped. Malformed lines
(fewer than 3 fields, or a timestamp that is not a non-negative integer)
are counted and reported but never abort the load.
"""

from __future__ import annotations

import gzip
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import IO, Iterable, Iterator, NamedTuple

from .errors import MalformedLine

MAX_REPORTED_MALFORMED = 100


class EventKind(IntEnum):
    """Event kinds, ordered by the equal-timestamp tie-break.

    At identical timestamps events sort SCREEN_ON < KEYGUARD_REMOVED <
    SCREEN_OFF < SHUTDOWN < OTHER, so an unlock logically follows a wake
    that happened in the same millisecond.
    """

    SCREEN_ON = 0
    KEYGUARD_REMOVED = 1
    SCREEN_OFF = 2
    SHUTDOWN = 3
    OTHER = 4


_KIND_BY_KEY = {
    "screen_on": EventKind.SCREEN_ON,
    "keyguard_removed": EventKind.KEYGUARD_REMOVED,
    "screen_off": EventKind.SCREEN_OFF,
    "shutdown": EventKind.SHUTDOWN,
}

_KEY_BY_KIND = {kind: key for key, kind in _KIND_BY_KEY.items()}


class LogEvent(NamedTuple):
    """One timestamped device event for a user.

    ``key`` is the raw key string from the log; for recognized kinds it
    equals the canonical key. ``value`` is retained only for OTHER events
    and is ``""`` when absent.
    """

    user_id: str
    timestamp_ms: int
    kind: EventKind
    key: str
    value: str = ""


@dataclass(frozen=True)
class UserTimeline:
    """All events of one user, sorted by (timestamp, kind tie-break)."""

    user_id: str
    events: tuple[LogEvent, ...]

    def __len__(self) -> int:
        return len(self.events)


@dataclass
class IngestStats:
    lines_read: int = 0
    skipped: int = 0
    malformed: int = 0
    duplicates_removed: int = 0
    n_users: int = 0
    n_events: int = 0
    malformed_examples: list[tuple[int, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "lines_read": self.lines_read,
            "skipped": self.skipped,
            "malformed": self.malformed,
            "duplicates_removed": self.duplicates_removed,
            "n_users": self.n_users,
            "n_events": self.n_events,
            "malformed_examples": [list(x) for x in self.malformed_examples],
        }


def parse_line(text: str) -> LogEvent | None:
    """Parse one log line into a LogEvent.

    Returns None for skippable lines (blank or comment). Raises
    MalformedLine for lines with fewer than 3 fields or a timestamp that
    is not a non-negative integer.
    """
    s = text.strip()
    if not s or s[0] == "#":
        return None
    parts = s.split(";", 3)
    if len(parts) < 3:
        raise MalformedLine(f"expected at least 3 ';'-separated fields, got {len(parts)}")
    try:
        ts = int(parts[1])
    except ValueError:
        raise MalformedLine(f"timestamp is not an integer: {parts[1]!r}") from None
    if ts < 0:
        raise MalformedLine(f"timestamp is negative: {ts}")
    key = parts[2]
    kind = _KIND_BY_KEY.get(key, EventKind.OTHER)
    value = parts[3] if (kind is EventKind.OTHER and len(parts) > 3) else ""
    return LogEvent(parts[0], ts, kind, key, value)


def format_line(event: LogEvent) -> str:
    """Canonical writer inverse to parse_line (round-trips every event)."""
    if event.kind is EventKind.OTHER and event.value:
        return f"{event.user_id};{event.timestamp_ms};{event.key};{event.value}"
    return f"{event.user_id};{event.timestamp_ms};{event.key}"


def load_events(lines: Iterable[str]) -> tuple[list[UserTimeline], IngestStats]:
    """Build per-user timelines from an iterable of log lines.

    Lines may arrive in any order and interleave users. Within each
    timeline, events are sorted ascending by (timestamp_ms, kind, key,
    value), which makes the result invariant under any permutation of the
    input. Exact duplicates (same user, timestamp, key, value) collapse
    to one event and are counted.

    Returns the timelines sorted by user_id plus ingest counters.
    """
    stats = IngestStats()
    per_user: dict[str, list[LogEvent]] = {}
    kind_other = EventKind.OTHER
    kind_by_key = _KIND_BY_KEY

    for line_no, line in enumerate(lines, start=1):
        stats.lines_read += 1
        s = line.strip()
        if not s or s[0] == "#":
            stats.skipped += 1
            continue
        parts = s.split(";", 3)
        if len(parts) < 3:
            stats.malformed += 1
            if len(stats.malformed_examples) < MAX_REPORTED_MALFORMED:
                stats.malformed_examples.append((line_no, "expected at least 3 fields"))
            continue
        try:
            ts = int(parts[1])
        except ValueError:
            ts = -1
        if ts < 0:
            stats.malformed += 1
            if len(stats.malformed_examples) < MAX_REPORTED_MALFORMED:
                stats.malformed_examples.append(
                    (line_no, f"bad timestamp: {parts[1]!r}")
                )
            continue
        key = parts[2]
        kind = kind_by_key.get(key, kind_other)
        value = parts[3] if (kind is kind_other and len(parts) > 3) else ""
        uid = parts[0]
        ev = LogEvent(uid, ts, kind, key, value)
        bucket = per_user.get(uid)
        if bucket is None:
            per_user[uid] = [ev]
        else:
            bucket.append(ev)

    timelines: list[UserTimeline] = []
    for uid in sorted(per_user):
        events = per_user[uid]
        events.sort(key=_sort_key)
        unique: list[LogEvent] = []
        prev = None
        for ev in events:
            probe = (ev.timestamp_ms, ev.kind, ev.key, ev.value)
            if probe == prev:
                stats.duplicates_removed += 1
            else:
                unique.append(ev)
                prev = probe
        timelines.append(UserTimeline(uid, tuple(unique)))
        stats.n_events += len(unique)
    stats.n_users = len(timelines)
    return timelines, stats


def _sort_key(ev: LogEvent) -> tuple[int, int, str, str]:
    return (ev.timestamp_ms, ev.kind, ev.key, ev.value)


def open_log(path: str | Path) -> IO[str]:
    """Open a plain-text or gzip-compressed (.gz) log file for reading."""
    p = Path(path)
    if p.suffix == ".gz":
        return gzip.open(p, "rt", encoding="utf-8")
    return open(p, "r", encoding="utf-8")


_LOG_SUFFIXES = (".log", ".txt", ".gz")


def iter_log_lines(paths: Iterable[str | Path]) -> Iterator[str]:
    """Yield lines from files and directories, in sorted path order.

    A directory contributes every regular file inside it whose name ends
    in .log, .txt or .gz (sorted by name, non-recursive).
    """
    expanded: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            expanded.extend(
                sorted(
                    child
                    for child in p.iterdir()
                    if child.is_file() and child.name.endswith(_LOG_SUFFIXES)
                )
            )
        else:
            expanded.append(p)
    for p in expanded:
        with open_log(p) as fh:
            yield from fh
