"""Request/response bodies of the HTTP API."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# -- requests --------------------------------------------------------


class DatasetUpload(Strict):
    name: str = Field(min_length=1, max_length=200)
    format: Literal["csv", "jsonl"] = "csv"
    content: str
    parse: dict | None = None  # column mapping etc., csv only


class ThresholdBody(Strict):
    theta_p: float = 6.0
    min_p: float = 10.0
    max_p: float | None = None
    theta_o: float = 10.0
    min_o: float = 50.0
    max_o: float | None = None


class FilterPreview(Strict):
    control: str  # dataset id of the matched control sample
    thresholds: ThresholdBody = ThresholdBody()
    procedure_perspective: str = "intervention"
    occupation_perspective: str = "occupation"
    sample_size: int = Field(10, ge=0, le=100)


class FilterApply(FilterPreview):
    name: str = Field(min_length=1, max_length=200)
    diagnosis_whitelist: list[str] = []
    diagnosis_perspective: str = "diagnosis"


class MagSpec(Strict):
    aspects: list[str] = Field(min_length=1)
    virtual_endpoints: bool = True


class MatrixSpec(Strict):
    params: dict = {}
    activity_aspects: list[str] | None = None  # default: all but the ordinal
    workers: int = Field(1, ge=1, le=16)


class ClusterSpec(Strict):
    runs: int = Field(25, ge=1, le=500)
    seeds: int = Field(5, ge=1, le=50)
    alpha: float = Field(0.5, gt=0.0, lt=1.0)


class RelevanceSpec(Strict):
    w1: float = Field(0.5, ge=0.0, le=1.0)
    w2: float = Field(0.5, ge=0.0, le=1.0)
    alpha: float = Field(0.85, ge=0.0, lt=1.0)
    clusters: str | None = None  # cluster-set artifact id
    cluster_index: int | None = Field(None, ge=0)


class ModelSpec(Strict):
    relevance: RelevanceSpec = RelevanceSpec()
    min_relevance: float = 0.0
    max_relevance: float | None = None
    options: dict = {}


# -- responses -------------------------------------------------------


class DatasetInfo(BaseModel):
    id: str
    name: str
    cases: int
    events: int
    schema_: list[str] = Field(alias="schema")
    malformed: int = 0

    model_config = ConfigDict(populate_by_name=True)


class LengthStatsInfo(BaseModel):
    count: int
    median: float
    q1: float
    q3: float
    iqr: float
    outlier_threshold: float
    outlier_count: int


class DatasetStats(BaseModel):
    id: str
    cases: int
    events: int
    lengths: LengthStatsInfo


class MagInfo(BaseModel):
    id: str
    dataset: str
    aspects: list[str]
    patients: int
    nodes: int
    edges: int


class JobInfo(BaseModel):
    id: str
    kind: str
    state: Literal["queued", "running", "done", "failed"]
    progress: float
    result: str | None = None
    error: str | None = None


class ApplyResult(BaseModel):
    id: str
    name: str
    cases: int
    events: int
    emptied_cases: list[str]


class ErrorBody(BaseModel):
    code: str
    message: str


class ErrorEnvelope(BaseModel):
    error: ErrorBody
