"""Synthetic event logs and graphs with known ground truth.

Generated corpora drive the oracle tests: planted sessions must be
recovered exactly by the sessionizer, planted daily slots must come back
as clusters, and planted graph blocks must come back as communities.
Everything is a pure function of its seed; the same seed and spec yield
byte-identical logs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .errors import InvalidSpec
from .graphs import WeightedGraph
from .ingest import EventKind, LogEvent, format_line
from .sessionize import DAY_S, Session

BASE_DAY = date(2023, 1, 1)
_EPOCH = date(1970, 1, 1)

DEFAULT_NOISE_RATE_PER_HOUR = 10.0

# margin between planted slot envelopes; covers the 100 ms wake lead
_SLOT_GAP_S = 1.0

_NOISE_KEYS = (
    ("app_started", "com.example.mail"),
    ("app_started", "com.example.feed"),
    ("battery_changed", "74"),
    ("net_state", "wifi"),
    ("alarm_fired", ""),
)


@dataclass(frozen=True)
class Slot:
    """One daily usage slot: a session centered at a clock time.

    ``jitter_s`` perturbs the session's start and end independently
    (uniform in +/- jitter_s), so generated sessions vary in both timing
    and length; ``duration_s`` must be at least twice the jitter so the
    length never goes negative.
    """

    center_sod: float
    duration_s: float
    jitter_s: float = 0.0
    probability: float = 1.0


@dataclass(frozen=True)
class ArchetypeSpec:
    """A daily usage pattern: slots replayed over a number of days."""

    name: str
    slots: tuple[Slot, ...]
    days: int
    tz_offset_s: int = 0
    start_day: date = BASE_DAY

    def validate(self) -> None:
        if self.days < 1:
            raise InvalidSpec("days must be at least 1")
        if not self.slots:
            raise InvalidSpec("at least one slot required")
        envelopes = []
        for slot in self.slots:
            if not 0.0 < slot.probability <= 1.0:
                raise InvalidSpec(f"probability must be in (0, 1]: {slot.probability}")
            if slot.duration_s <= 0.0:
                raise InvalidSpec("slot duration must be positive")
            if slot.jitter_s < 0.0:
                raise InvalidSpec("jitter must be non-negative")
            if slot.duration_s < 2.0 * slot.jitter_s:
                raise InvalidSpec(
                    "duration must be at least twice the jitter "
                    "(end jitter may otherwise cross the start)"
                )
            width = slot.duration_s + 2.0 * slot.jitter_s + 2.0 * _SLOT_GAP_S
            if width >= DAY_S:
                raise InvalidSpec("slot envelope must be narrower than 24 h")
            lo = (slot.center_sod - slot.duration_s / 2.0 - slot.jitter_s - _SLOT_GAP_S) % DAY_S
            envelopes.append((lo, width))
        for i in range(len(envelopes)):
            for j in range(i + 1, len(envelopes)):
                if _arcs_overlap(envelopes[i], envelopes[j]):
                    raise InvalidSpec(
                        f"slots {i} and {j} overlap after maximal jitter"
                    )


def _arcs_overlap(a: tuple[float, float], b: tuple[float, float]) -> bool:
    """Whether two circular arcs (start, length) on the day circle intersect."""
    (sa, la), (sb, lb) = a, b
    return ((sb - sa) % DAY_S) < la or ((sa - sb) % DAY_S) < lb


ARCHETYPES: dict[str, tuple[Slot, ...]] = {
    "morning": (
        Slot(center_sod=7.5 * 3600, duration_s=1800, jitter_s=600),
        Slot(center_sod=8.5 * 3600, duration_s=1500, jitter_s=600),
    ),
    "evening": (
        Slot(center_sod=19.5 * 3600, duration_s=2400, jitter_s=600),
        Slot(center_sod=21.5 * 3600, duration_s=3000, jitter_s=600, probability=0.95),
        Slot(center_sod=22.75 * 3600, duration_s=1200, jitter_s=300, probability=0.9),
    ),
    "all_day": (
        Slot(center_sod=9.0 * 3600, duration_s=1500, jitter_s=600, probability=0.9),
        Slot(center_sod=13.0 * 3600, duration_s=1500, jitter_s=600, probability=0.9),
        Slot(center_sod=17.0 * 3600, duration_s=1800, jitter_s=600),
        Slot(center_sod=21.0 * 3600, duration_s=1800, jitter_s=600),
    ),
}


def make_archetype(
    name: str, days: int, tz_offset_s: int = 0, start_day: date = BASE_DAY
) -> ArchetypeSpec:
    """Instantiate one of the built-in archetypes for a number of days."""
    if name not in ARCHETYPES:
        raise InvalidSpec(f"unknown archetype {name!r}; have {sorted(ARCHETYPES)}")
    return ArchetypeSpec(name, ARCHETYPES[name], days, tz_offset_s, start_day)


@dataclass
class GeneratedUser:
    user_id: str
    lines: list[str] = field(default_factory=list)
    planted: list[Session] = field(default_factory=list)


def gen_user_logs(
    spec: ArchetypeSpec,
    user_id: str,
    seed: int,
    noise_rate_per_hour: float = DEFAULT_NOISE_RATE_PER_HOUR,
) -> GeneratedUser:
    """Emit log lines for one user plus the planted ground-truth sessions.

    Each fired slot produces SCREEN_ON 100 ms before the unlock,
    KEYGUARD_REMOVED at the session start, and SCREEN_OFF at the end.
    Machine noise (unrecognized keys only) is interleaved at the Poisson
    rate; it never affects the screen-state automaton.
    """
    spec.validate()
    if noise_rate_per_hour < 0:
        raise InvalidSpec("noise rate must be non-negative")
    rng = random.Random(seed)
    base_day_idx = (spec.start_day - _EPOCH).days

    events: list[LogEvent] = []
    intervals: list[tuple[int, int]] = []
    for d in range(spec.days):
        day_start_s = (base_day_idx + d) * DAY_S - spec.tz_offset_s
        for slot in spec.slots:
            if rng.random() >= slot.probability:
                continue
            if slot.jitter_s:
                j_start = rng.uniform(-slot.jitter_s, slot.jitter_s)
                j_end = rng.uniform(-slot.jitter_s, slot.jitter_s)
            else:
                j_start = j_end = 0.0
            start_sod = slot.center_sod - slot.duration_s / 2.0 + j_start
            end_sod = slot.center_sod + slot.duration_s / 2.0 + j_end
            start_ms = round((day_start_s + start_sod) * 1000.0)
            end_ms = round((day_start_s + end_sod) * 1000.0)
            events.append(LogEvent(user_id, start_ms - 100, EventKind.SCREEN_ON, "screen_on"))
            events.append(LogEvent(user_id, start_ms, EventKind.KEYGUARD_REMOVED, "keyguard_removed"))
            events.append(LogEvent(user_id, end_ms, EventKind.SCREEN_OFF, "screen_off"))
            intervals.append((start_ms, end_ms))
        if noise_rate_per_hour > 0:
            t = float(day_start_s)
            day_end_s = day_start_s + DAY_S
            rate_per_s = noise_rate_per_hour / 3600.0
            while True:
                t += rng.expovariate(rate_per_s)
                if t >= day_end_s:
                    break
                key, value = _NOISE_KEYS[rng.randrange(len(_NOISE_KEYS))]
                events.append(
                    LogEvent(user_id, round(t * 1000.0), EventKind.OTHER, key, value)
                )

    events.sort(key=lambda e: (e.timestamp_ms, e.kind, e.key, e.value))
    planted = [
        Session.from_interval(user_id, i + 1, start_ms, end_ms, spec.tz_offset_s)
        for i, (start_ms, end_ms) in enumerate(sorted(intervals))
    ]
    return GeneratedUser(user_id, [format_line(e) for e in events], planted)


def gen_planted_graph(
    blocks: list[int], w_in: float, w_out: float, seed: int = 0
) -> tuple[WeightedGraph, np.ndarray]:
    """Complete graph with planted blocks and its true labels.

    Every intra-block edge has weight ``w_in`` and every inter-block edge
    ``w_out`` (requires w_in > w_out > 0). The seed permutes node ids so
    blocks are not contiguous index ranges; 0 keeps the natural order.
    """
    if not blocks or any(b < 1 for b in blocks):
        raise InvalidSpec("blocks must be non-empty positive sizes")
    if not (w_in > w_out > 0.0):
        raise InvalidSpec("required: w_in > w_out > 0")
    n = sum(blocks)
    labels = np.repeat(np.arange(len(blocks)), blocks)
    if seed != 0:
        perm = list(range(n))
        random.Random(seed).shuffle(perm)
        relabeled = np.empty(n, dtype=int)
        relabeled[perm] = labels
        labels = relabeled
    iu, iv = np.triu_indices(n, k=1)
    w = np.where(labels[iu] == labels[iv], w_in, w_out)
    return WeightedGraph(n, iu, iv, w), labels
