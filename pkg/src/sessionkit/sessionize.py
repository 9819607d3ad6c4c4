"""Turn an event timeline into unlock-to-lock usage sessions.

A session opens at a KEYGUARD_REMOVED that follows a SCREEN_ON and
closes at the next SCREEN_OFF or SHUTDOWN. A SCREEN_ON that is not
followed by KEYGUARD_REMOVED before the next state-relevant event is an
aborted wake-up: the automaton resets and no session is produced. OTHER
events never affect the automaton. A session still open at the end of
the log is dropped (its end is unknowable) and counted.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

from .ingest import EventKind, UserTimeline

DAY_S = 86400
DAY_MS = 86400_000
_EPOCH = date(1970, 1, 1)


def sod_of_ms(timestamp_ms: int, tz_offset_s: int = 0) -> float:
    """Seconds-of-day in [0, 86400) for an epoch-ms timestamp.

    Computed with integer modular arithmetic so millisecond precision
    survives arbitrarily large epochs.
    """
    return ((timestamp_ms + tz_offset_s * 1000) % DAY_MS) / 1000.0


def day_key_of_ms(timestamp_ms: int, tz_offset_s: int = 0) -> date:
    """Calendar date of an epoch-ms timestamp under the given offset."""
    days = (timestamp_ms // 1000 + tz_offset_s) // DAY_S
    return _EPOCH + timedelta(days=int(days))


@dataclass(frozen=True)
class Session:
    """One unlock-to-lock interval with derived time-of-day coordinates.

    ``day_key`` is the calendar date of the session start under the
    configured timezone offset; a session spanning midnight is attributed
    wholly to its start day.
    """

    user_id: str
    session_id: int
    start_ms: int
    end_ms: int
    day_key: date
    start_sod: float
    end_sod: float

    @property
    def duration_s(self) -> float:
        return (self.end_ms - self.start_ms) / 1000.0

    @classmethod
    def from_interval(
        cls,
        user_id: str,
        session_id: int,
        start_ms: int,
        end_ms: int,
        tz_offset_s: int = 0,
    ) -> "Session":
        return cls(
            user_id=user_id,
            session_id=session_id,
            start_ms=start_ms,
            end_ms=end_ms,
            day_key=day_key_of_ms(start_ms, tz_offset_s),
            start_sod=sod_of_ms(start_ms, tz_offset_s),
            end_sod=sod_of_ms(end_ms, tz_offset_s),
        )


@dataclass
class SessionizeStats:
    sessions_built: int = 0
    aborted_wakeups: int = 0
    unterminated_dropped: int = 0
    sessions_over_24h: int = 0

    def to_dict(self) -> dict:
        return {
            "sessions_built": self.sessions_built,
            "aborted_wakeups": self.aborted_wakeups,
            "unterminated_dropped": self.unterminated_dropped,
            "sessions_over_24h": self.sessions_over_24h,
        }


_NO_SCREEN, _WOKE, _OPEN = 0, 1, 2


def build_sessions(
    timeline: UserTimeline, tz_offset_s: int = 0
) -> tuple[list[Session], SessionizeStats]:
    """Replay the screen-state automaton over one user's timeline.

    Requires the timeline sorted per the ingest contract. Robust to any
    event sequence: anomalies are counted, never raised. Zero-length
    sessions are kept; sessions longer than 24 h are kept but counted.
    """
    stats = SessionizeStats()
    sessions: list[Session] = []
    state = _NO_SCREEN
    start_ms = 0
    uid = timeline.user_id

    for ev in timeline.events:
        kind = ev.kind
        if kind is EventKind.OTHER:
            continue
        if state == _NO_SCREEN:
            if kind is EventKind.SCREEN_ON:
                state = _WOKE
        elif state == _WOKE:
            if kind is EventKind.KEYGUARD_REMOVED:
                state = _OPEN
                start_ms = ev.timestamp_ms
            else:
                state = _NO_SCREEN
                stats.aborted_wakeups += 1
        else:
            if kind is EventKind.SCREEN_OFF or kind is EventKind.SHUTDOWN:
                end_ms = ev.timestamp_ms
                sessions.append(
                    Session.from_interval(
                        uid, len(sessions) + 1, start_ms, end_ms, tz_offset_s
                    )
                )
                if end_ms - start_ms > DAY_MS:
                    stats.sessions_over_24h += 1
                state = _NO_SCREEN

    if state == _OPEN:
        stats.unterminated_dropped += 1
    elif state == _WOKE:
        stats.aborted_wakeups += 1
    stats.sessions_built = len(sessions)
    return sessions, stats
