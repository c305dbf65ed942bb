"""Request/response models for the HTTP service.

Item payloads mirror the core record dicts one-to-one so that JSONL files
written by the pipeline and bodies accepted here stay interchangeable.
"""
from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

Scalar = Union[bool, int, float, str]


class HealthResponse(BaseModel):
    status: str
    version: str


class ScenarioInfo(BaseModel):
    name: str
    description: str
    duration: float
    seed: int
    n_objects: int
    n_obstacles: int
    has_map: bool


class ScenarioListResponse(BaseModel):
    scenarios: list[ScenarioInfo]


class GridObjectModel(BaseModel):
    """Extracted grid object, one item of a grid envelope."""

    model_config = ConfigDict(extra="forbid")

    ref_pos: list[float] = Field(min_length=2, max_length=2)
    ref_label: str
    speed: float
    orientation: float
    bbox: list[list[float]] = Field(min_length=4, max_length=4)
    timestamp: float
    label: Optional[int] = None
    cell_count: int = 0


class TrackStateModel(BaseModel):
    """External tracker object, one item of a track envelope."""

    model_config = ConfigDict(extra="forbid")

    ref_pos: list[float] = Field(min_length=2, max_length=2)
    ref_label: str
    speed: float
    accel: float
    heading: float
    yaw_rate: float
    bbox: list[list[float]] = Field(min_length=4, max_length=4)
    cov: list[list[float]] = Field(min_length=6, max_length=6)
    existence: float = Field(gt=0.0, le=1.0)
    obj_class: str
    label: int
    timestamp: float


class EnvelopeRequest(BaseModel):
    timestamp: float
    source: Literal["grid", "track"]
    items: list[Union[TrackStateModel, GridObjectModel]] = Field(
        default_factory=list)

    @model_validator(mode="after")
    def _items_match_source(self):
        want = GridObjectModel if self.source == "grid" else TrackStateModel
        for item in self.items:
            if not isinstance(item, want):
                raise ValueError(
                    f"{self.source} envelope holds a "
                    f"{type(item).__name__} item")
        return self


class MetaObjectModel(BaseModel):
    label: int
    ref_pos: list[float]
    ref_label: str
    speed: float
    heading: float
    length: float
    width: float
    bbox: list[list[float]]
    obj_class: str
    confidence: float
    created_at: float
    last_update: float
    grid_hits: int
    track_hits: int


class ConfidenceRecordModel(BaseModel):
    timestamp: float
    source: str
    candidate_label: int
    meta_label: Optional[int]
    eta_p: float
    eta_e: float
    eta_m: float
    eta: float
    action: str
    reason: Optional[str] = None


class FusionStepModel(BaseModel):
    timestamp: float
    source: str
    records: list[ConfidenceRecordModel]
    metas: list[MetaObjectModel]


class IngestResponse(BaseModel):
    steps: list[FusionStepModel]
    watermark: Optional[float]


class FrameRequest(BaseModel):
    """A serialized grid frame to extract objects from and optionally fuse."""

    frame: dict
    fuse: bool = True


class FrameResponse(BaseModel):
    objects: list[GridObjectModel]
    steps: list[FusionStepModel]
    watermark: Optional[float]


class SessionCreateRequest(BaseModel):
    overrides: dict[str, Scalar] = Field(default_factory=dict)
    map: Optional[dict] = None
    map_frame: Literal["global", "ego"] = "global"
    anchor: Optional[dict] = None  # east/north/heading, required for global


class SessionInfo(BaseModel):
    session_id: str
    created_at: float
    watermark: Optional[float]
    n_metas: int
    n_records: int


class ObjectsResponse(BaseModel):
    watermark: Optional[float]
    metas: list[MetaObjectModel]


class ObjectMetricsModel(BaseModel):
    object_id: int
    frames: int
    detected: int
    detection_rate: float
    exactly_one_rate: float
    rmse: float
    label_switches: int


class FalseObjectModel(BaseModel):
    object_id: int
    track_label: int
    frames: int
    frames_with_output: int
    accepted_records: int


class RunSummary(BaseModel):
    n_steps: int
    n_grid_frames: int
    n_records: int
    n_final_metas: int
    objects: list[ObjectMetricsModel]
    false_objects: list[FalseObjectModel]
    false_positive_frames: int
    false_positives_total: int


class RunArtifacts(BaseModel):
    frames_jsonl: str
    confidence_jsonl: str
    metrics_csv: str
    plots: dict[str, str]


class RunRequest(BaseModel):
    scenario: Optional[str] = None     # canned scenario name
    spec: Optional[dict] = None        # inline scenario spec
    seed: Optional[int] = None
    overrides: dict[str, Scalar] = Field(default_factory=dict)
    max_grid_frames: Optional[int] = Field(default=None, ge=1)
    eval_gate: float = 2.0

    @model_validator(mode="after")
    def _exactly_one_source(self):
        if (self.scenario is None) == (self.spec is None):
            raise ValueError("provide exactly one of scenario or spec")
        return self


class RunResponse(BaseModel):
    scenario: str
    seed: int
    summary: RunSummary
    artifacts: RunArtifacts


class ErrorDetail(BaseModel):
    kind: Literal["config", "scenario", "ingest", "internal", "not_found"]
    message: str
