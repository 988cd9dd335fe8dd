"""Request/response models shared by the HTTP service and the CLI."""
from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field


class CostRequest(BaseModel):
    p: int = Field(..., ge=2)
    q: int = Field(..., ge=1)
    mode: Literal["stdp", "rstdp"] = "stdp"


class ReferenceValues(BaseModel):
    gates: int
    area_mm2: float
    time_ns: float
    power_mw: float


class CostResponse(BaseModel):
    p: int
    q: int
    mode: str
    gates: float
    delay_gates: float
    time_gate_delays: float
    p_static_units: float
    p_dynamic_units: float
    area_mm2: float
    time_ns: float
    power_mw: float
    assumptions: list[str] = []
    reference: Optional[ReferenceValues] = None


class EquivalenceRequest(BaseModel):
    p: int = Field(16, ge=1)
    q: int = Field(4, ge=1)
    trials: int = Field(1000, ge=1)
    seed: int = 0


class EquivalenceResponse(BaseModel):
    passed: bool
    trials: int
    first_divergence: Optional[int] = None
    detail: dict[str, Any] = {}


class JobStatus(BaseModel):
    id: str
    kind: Literal["train", "incremental"]
    state: Literal["queued", "running", "done", "failed"]
    out_dir: str
    summary: Optional[dict[str, Any]] = None
    error: Optional[str] = None
