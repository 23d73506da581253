"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class DatasetInfo(BaseModel):
    dataset_id: str
    label: str
    node_count: int
    edge_count: int
    total_weight: int


class DatasetListResponse(BaseModel):
    generated_at: str
    datasets: list[DatasetInfo]


class NodeMetrics(BaseModel):
    author_id: str
    in_total: int
    out_total: int
    in_degree: int
    out_degree: int
    betweenness: float
    community: int | None = None


class DatasetMetricsResponse(BaseModel):
    dataset_id: str
    nodes: list[NodeMetrics]
    reciprocity: float | None = None
    modularity: float | None = None
    top_shares: dict[str, float] = Field(default_factory=dict)


class RunOverrides(BaseModel):
    cap: int | None = None
    window: int | None = None
    seed: int | None = None
    per_category_limit: int | None = None
    thresholds: dict[str, float] = Field(default_factory=dict)


class RunRequest(BaseModel):
    stages: list[str]
    overrides: RunOverrides = Field(default_factory=RunOverrides)


class RunResponse(BaseModel):
    status: str
    stages: list[str]
    artifacts: list[str]
