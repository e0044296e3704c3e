"""Pydantic request/response models for the annotation service."""

from __future__ import annotations

from typing import List, Optional

from pydantic import BaseModel, Field


class SessionCreateRequest(BaseModel):
    embedding_mode: str = Field(default="fixed", pattern="^(fixed|per_request)$")
    embedding: Optional[List[float]] = None
    mutation_rate: Optional[float] = Field(default=None, ge=0.0, le=1.0)


class AlternativeCard(BaseModel):
    id: int
    x: float
    y: float
    label: str


class SessionCreated(BaseModel):
    session_id: str
    embedding_mode: str
    n_alternatives: int
    lottery: List[float]
    answer_count: int


class QueryResponse(BaseModel):
    session_id: str
    a1: AlternativeCard
    a2: AlternativeCard
    lottery: List[float]
    answer_count: int


class AnswerRequest(BaseModel):
    winner: int


class AnswerResponse(BaseModel):
    session_id: str
    lottery: List[float]
    answer_count: int


class SessionState(BaseModel):
    session_id: str
    lottery: List[float]
    answer_count: int
    history_length: int
    pending: bool


class SessionClosed(BaseModel):
    session_id: str
    answer_count: int
    transcript_path: Optional[str]


class ServiceInfo(BaseModel):
    n_alternatives: int
    embedding_dim: int
    alternatives: List[AlternativeCard]
