"""In-memory writing sessions: snapshot scoring, trajectories, idle expiry
and optional JSON-lines persistence on close."""

from __future__ import annotations

import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ..bundle import ModelBundle, score_text
from ..errors import EssayScoreError

DEFAULT_IDLE_TIMEOUT_S = 30 * 60


class SessionError(EssayScoreError):
    code = "session_error"


class UnknownSession(SessionError):
    code = "unknown_session"


class SessionClosed(SessionError):
    code = "session_closed"


class NonMonotonicTime(SessionError):
    code = "non_monotonic_time"


class UnknownEssaySet(SessionError):
    code = "unknown_essay_set"


@dataclass
class Snapshot:
    t_ms: int
    text: str
    score: int
    per_model: dict[str, int]
    raw: float
    cached: bool
    latency_ms: int


@dataclass
class Trajectory:
    session_id: str
    points: list[tuple[int, int]]  # (t_ms, score), ascending in t
    final: int | None


@dataclass
class Session:
    id: str
    essay_set: int
    created_at: float
    snapshots: list[Snapshot] = field(default_factory=list)
    open: bool = True
    last_activity: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def trajectory(self) -> Trajectory:
        points = [(s.t_ms, s.score) for s in self.snapshots]
        return Trajectory(
            session_id=self.id,
            points=points,
            final=points[-1][1] if points else None,
        )


class SessionStore:
    """Thread-safe session registry over immutable, shared model bundles.

    The registry map is guarded by one lock; each session mutates its own
    snapshot list under its own lock, so scoring for different sessions
    never serializes.
    """

    def __init__(
        self,
        bundles: dict[int, ModelBundle],
        idle_timeout_s: float = DEFAULT_IDLE_TIMEOUT_S,
        persist_path: str | Path | None = None,
        clock: Callable[[], float] = time.monotonic,
    ) -> None:
        if not bundles:
            raise ValueError("at least one bundle is required")
        self.bundles = dict(bundles)
        self.idle_timeout_s = idle_timeout_s
        self.persist_path = Path(persist_path) if persist_path else None
        self.clock = clock
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()

    def essay_sets(self) -> list[int]:
        return sorted(self.bundles)

    def create(self, essay_set: int) -> Session:
        if essay_set not in self.bundles:
            raise UnknownEssaySet(f"no bundle loaded for essay set {essay_set}")
        now = self.clock()
        session = Session(
            id=secrets.token_urlsafe(16),  # 128 bits
            essay_set=essay_set,
            created_at=time.time(),
            last_activity=now,
        )
        with self._registry_lock:
            self._expire_idle(now)
            self._sessions[session.id] = session
        return session

    def _get(self, session_id: str) -> Session:
        now = self.clock()
        with self._registry_lock:
            self._expire_idle(now)
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"unknown session {session_id!r}")
        return session

    def _expire_idle(self, now: float) -> None:
        # callers hold the registry lock
        for session in self._sessions.values():
            if session.open and now - session.last_activity > self.idle_timeout_s:
                with session.lock:
                    session.open = False

    def submit(self, session_id: str, t_ms: int, text: str) -> Snapshot:
        """Score one snapshot and append it to the trajectory.

        Rejections (closed session, non-monotonic time) leave the stored
        trajectory untouched. Submitting the exact text of the previous
        snapshot reuses its scores without re-running the models.
        """
        session = self._get(session_id)
        bundle = self.bundles[session.essay_set]
        with session.lock:
            if not session.open:
                raise SessionClosed(f"session {session_id!r} is closed")
            if session.snapshots and t_ms <= session.snapshots[-1].t_ms:
                raise NonMonotonicTime(
                    f"t_ms {t_ms} is not greater than the previous snapshot's "
                    f"{session.snapshots[-1].t_ms}"
                )
            started = time.perf_counter()
            previous = session.snapshots[-1] if session.snapshots else None
            if previous is not None and previous.text == text:
                snapshot = Snapshot(
                    t_ms=t_ms,
                    text=text,
                    score=previous.score,
                    per_model=dict(previous.per_model),
                    raw=previous.raw,
                    cached=True,
                    latency_ms=int(round((time.perf_counter() - started) * 1000)),
                )
            else:
                result = score_text(bundle, text)
                snapshot = Snapshot(
                    t_ms=t_ms,
                    text=text,
                    score=result.score,
                    per_model=result.per_model,
                    raw=result.raw,
                    cached=False,
                    latency_ms=int(round((time.perf_counter() - started) * 1000)),
                )
            session.snapshots.append(snapshot)
            session.last_activity = self.clock()
        return snapshot

    def trajectory(self, session_id: str) -> Trajectory:
        session = self._get(session_id)
        with session.lock:
            return session.trajectory()

    def close(self, session_id: str) -> Trajectory:
        """Close (idempotently) and return the final trajectory."""
        session = self._get(session_id)
        with session.lock:
            was_open = session.open
            session.open = False
            trajectory = session.trajectory()
        if was_open and self.persist_path is not None:
            record = {
                "session_id": session.id,
                "essay_set": session.essay_set,
                "created_at": session.created_at,
                "points": [{"t_ms": t, "score": s} for t, s in trajectory.points],
                "final": trajectory.final,
            }
            with self._registry_lock:
                with open(self.persist_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, sort_keys=True) + "\n")
        return trajectory


def load_trajectory_record(line: str) -> Trajectory:
    """Rebuild a Trajectory from one persisted JSON-lines record."""
    obj = json.loads(line)
    points = [(int(p["t_ms"]), int(p["score"])) for p in obj["points"]]
    return Trajectory(
        session_id=obj["session_id"],
        points=points,
        final=obj["final"],
    )
