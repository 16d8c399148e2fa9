"""Request/response models for the experiment service."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field, field_validator

from ..experiments import BENCHMARKS, CONDITIONS, PRESETS

Benchmark = Literal["codebooks", "reversals", "semantic_structure", "gridworld_bc"]
Condition = Literal[
    "baseline", "retrieval", "larger_batch", "irrelevant_retrieval", "no_icl", "seq_batch_grid"
]
Preset = Literal["desk", "paper"]


class GenerateDataRequest(BaseModel):
    benchmark: Benchmark
    preset: Preset = "desk"
    data_seed: int = 0
    icl_enabled: bool = True
    force: bool = False


class ExperimentRequest(BaseModel):
    benchmark: Benchmark
    condition: Condition
    preset: Preset = "desk"
    seeds: list[int] = Field(default=[0, 1, 2, 3])
    data_seed: int = 0
    cue_variant: Literal["strong", "reduced", "both"] = "both"
    train_overrides: dict[str, Any] = Field(default_factory=dict)
    force: bool = False

    @field_validator("seeds")
    @classmethod
    def _non_empty(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("seeds must be non-empty")
        return v


class ReportRequest(BaseModel):
    benchmark: Benchmark
    condition: Condition
    preset: Preset = "desk"
    data_seed: int = 0


class JobRecord(BaseModel):
    job_id: str
    kind: str
    status: Literal["queued", "running", "done", "error"]
    created_at: str
    finished_at: Optional[str] = None
    progress: list[str] = Field(default_factory=list)
    result: Optional[dict[str, Any]] = None
    error: Optional[str] = None


class JobList(BaseModel):
    jobs: list[JobRecord]


class HealthResponse(BaseModel):
    status: Literal["ok"]
    version: str
    artifacts_root: str


class PresetInfo(BaseModel):
    benchmarks: list[str] = Field(default_factory=lambda: list(BENCHMARKS))
    conditions: list[str] = Field(default_factory=lambda: list(CONDITIONS))
    presets: list[str] = Field(default_factory=lambda: list(PRESETS))


class SummaryResponse(BaseModel):
    benchmark: str
    experiment_dir: str
    summary: dict[str, Any]
