"""FastAPI application wrapping the session store.

Endpoints (JSON over HTTP):

  POST /sessions                    create a writing session for an essay set
  POST /sessions/{id}/snapshots     score one snapshot of the answer-in-progress
  GET  /sessions/{id}/trajectory    score-vs-time series so far
  POST /sessions/{id}/close         close (idempotent) and return the trajectory
  GET  /sets                        essay sets available for scoring
  GET  /healthz                     liveness probe

Errors are ``{"error": code}`` with codes unknown_session, session_closed,
non_monotonic_time and unknown_essay_set.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..bundle import ModelBundle
from .schemas import (
    CreateSessionRequest,
    CreateSessionResponse,
    HealthResponse,
    SetsResponse,
    SnapshotRequest,
    SnapshotResponse,
    TrajectoryPoint,
    TrajectoryResponse,
)
from .sessions import (
    DEFAULT_IDLE_TIMEOUT_S,
    NonMonotonicTime,
    SessionClosed,
    SessionError,
    SessionStore,
    Trajectory,
    UnknownEssaySet,
    UnknownSession,
)

_STATUS_BY_ERROR = {
    UnknownSession: 404,
    UnknownEssaySet: 404,
    SessionClosed: 409,
    NonMonotonicTime: 400,
}


def _trajectory_response(trajectory: Trajectory) -> TrajectoryResponse:
    return TrajectoryResponse(
        points=[TrajectoryPoint(t_ms=t, score=s) for t, s in trajectory.points],
        final=trajectory.final,
    )


def create_app(
    bundles: dict[int, ModelBundle],
    cors_origins: Sequence[str] = ("*",),
    idle_timeout_s: float = DEFAULT_IDLE_TIMEOUT_S,
    persist_path: str | Path | None = None,
) -> FastAPI:
    store = SessionStore(
        bundles, idle_timeout_s=idle_timeout_s, persist_path=persist_path
    )
    app = FastAPI(title="essayscore", docs_url=None, redoc_url=None)
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(SessionError)
    async def session_error_handler(_request: Request, exc: SessionError):
        status = _STATUS_BY_ERROR.get(type(exc), 400)
        return JSONResponse(status_code=status, content={"error": exc.code})

    @app.post("/sessions", response_model=CreateSessionResponse, status_code=201)
    def create_session(body: CreateSessionRequest) -> CreateSessionResponse:
        session = store.create(body.essay_set)
        return CreateSessionResponse(session_id=session.id, essay_set=session.essay_set)

    @app.post("/sessions/{session_id}/snapshots", response_model=SnapshotResponse)
    def submit_snapshot(session_id: str, body: SnapshotRequest) -> SnapshotResponse:
        snap = store.submit(session_id, body.t_ms, body.text)
        return SnapshotResponse(
            t_ms=snap.t_ms,
            score=snap.score,
            per_model=snap.per_model,
            raw=snap.raw,
            cached=snap.cached,
            latency_ms=snap.latency_ms,
        )

    @app.get("/sessions/{session_id}/trajectory", response_model=TrajectoryResponse)
    def get_trajectory(session_id: str) -> TrajectoryResponse:
        return _trajectory_response(store.trajectory(session_id))

    @app.post("/sessions/{session_id}/close", response_model=TrajectoryResponse)
    def close_session(session_id: str) -> TrajectoryResponse:
        return _trajectory_response(store.close(session_id))

    @app.get("/sets", response_model=SetsResponse)
    def get_sets() -> SetsResponse:
        infos = []
        for set_id in store.essay_sets():
            scale = store.bundles[set_id].scale
            infos.append(
                {
                    "essay_set": set_id,
                    "min_score": scale.min_score,
                    "max_score": scale.max_score,
                }
            )
        return SetsResponse(sets=infos)

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse()

    return app
