"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class LoadWorkspaceRequest(BaseModel):
    graph_path: str
    doc_vectors_path: str
    entity_vectors_path: str
    entity_dim: int = 1536


class WorkspaceInfo(BaseModel):
    papers: int
    entities: int
    edges: int
    loaded: bool = True


class GraphStats(BaseModel):
    papers: int
    entities: int
    edges: int
    cites: int
    mentions: int
    achievedBy: int
    usedBy: int
    evaluatedBy: int
    related: int


class ProfileModel(BaseModel):
    w: list[float] = Field(min_length=4, max_length=4)
    alpha: list[float] = Field(min_length=4, max_length=4)


class RecommendRequest(BaseModel):
    query_id: str
    k: int = 50
    n: int = 10
    mode: str = "coarse"
    profile: Optional[ProfileModel] = None


class RecommendationItem(BaseModel):
    paper_id: str
    coarse_score: float
    per_view_cos: list[float]
    refined_score: Optional[float] = None
    signals: Optional[list[float]] = None
    padded: bool = False


class RecommendResponse(BaseModel):
    query_id: str
    mode: str
    flags: list[str]
    items: list[RecommendationItem]


class EvaluateRequest(BaseModel):
    judgments: dict[str, list[str]]
    k: int = 50
    eval_k: int = 10
    mode: str = "coarse"
    profile: Optional[ProfileModel] = None


class EvaluateResponse(BaseModel):
    map: float
    ndcg: float
    ild: float
    coverage: Optional[float] = None
    skipped_queries: int


class ErrorResponse(BaseModel):
    error: str
    message: str
