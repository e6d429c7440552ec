"""Real-time snapshot-scoring HTTP service."""

from .app import create_app
from .sessions import (
    DEFAULT_IDLE_TIMEOUT_S,
    NonMonotonicTime,
    Session,
    SessionClosed,
    SessionError,
    SessionStore,
    Snapshot,
    Trajectory,
    UnknownEssaySet,
    UnknownSession,
    load_trajectory_record,
)

__all__ = [
    "DEFAULT_IDLE_TIMEOUT_S",
    "NonMonotonicTime",
    "Session",
    "SessionClosed",
    "SessionError",
    "SessionStore",
    "Snapshot",
    "Trajectory",
    "UnknownEssaySet",
    "UnknownSession",
    "create_app",
    "load_trajectory_record",
]
