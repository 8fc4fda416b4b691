"""Request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class CapacityRequest(BaseModel):
    mu: int = Field(0, ge=0, le=3, description="numerology index")
    payload_bytes: int = Field(350, ge=0)
    mcs_index: int = Field(1, ge=0, le=27)
    rri_ms: int = Field(100, ge=1)
    baseline_payload_bytes: int | None = Field(300, ge=0)
    subchannel_mode: str = Field("exact", pattern="^(exact|standard)$")


class CapacityResponse(BaseModel):
    mu: int
    payload_bytes: int
    mcs_index: int
    rri_ms: int
    re_per_prb: int
    res_per_package: int
    prbs_per_package: int
    subchannel_prbs: int | None
    prbs_per_slot: int
    subchannels_per_slot: int | None
    max_vehicles: int | None
    baseline_max_vehicles: int | None = None
    overhead_fraction: float | None = None


class SimulateRequest(BaseModel):
    num_vehicles: int = Field(100, ge=1)
    rri_ms: int = Field(100, ge=1)
    numerology: int = Field(0, ge=0, le=3)
    payload_bytes: int = Field(350, ge=1)
    mcs_index: int = Field(1, ge=0, le=27)
    num_rris: int = Field(100, ge=15)
    seeds: list[int] = Field(default_factory=lambda: list(range(30)), min_length=1)
    mode: str = Field("both", pattern="^(baseline|ledger|both)$")
    keep_probability: float = Field(0.8, ge=0.0, le=1.0)
    allow_overload: bool = False


class TraceRow(BaseModel):
    rri_index: int
    mode: str
    mean_collision_prob: float
    min_prob: float
    max_prob: float
    n_seeds: int


class ModeSummary(BaseModel):
    mode: str
    per_seed_convergence_rri: list[int | None]
    converged_seeds: int


class SimulateResponse(BaseModel):
    traces: list[TraceRow]
    summaries: list[ModeSummary]


class HealthResponse(BaseModel):
    status: str
    version: str
