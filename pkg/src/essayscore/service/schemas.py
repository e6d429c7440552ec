"""Pydantic request/response models for the snapshot-scoring API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class CreateSessionRequest(BaseModel):
    essay_set: int


class CreateSessionResponse(BaseModel):
    session_id: str
    essay_set: int


class SnapshotRequest(BaseModel):
    t_ms: int = Field(ge=0, description="milliseconds since session start")
    text: str


class SnapshotResponse(BaseModel):
    t_ms: int
    score: int
    per_model: dict[str, int]
    raw: float
    cached: bool
    latency_ms: int


class TrajectoryPoint(BaseModel):
    t_ms: int
    score: int


class TrajectoryResponse(BaseModel):
    points: list[TrajectoryPoint]
    final: int | None


class EssaySetInfo(BaseModel):
    essay_set: int
    min_score: int
    max_score: int


class SetsResponse(BaseModel):
    sets: list[EssaySetInfo]


class HealthResponse(BaseModel):
    status: str = "ok"


class ErrorResponse(BaseModel):
    error: str
