"""Request/response bodies of the HTTP API."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class ErrorBody(BaseModel):
    code: str
    message: str


class TrainOptions(BaseModel):
    """Training knobs accepted by the model-creation endpoint."""

    iters_per_scale: int = Field(default=2000, ge=1, le=20000)
    seed: int = Field(default=0, ge=0)
    scales_max_dim: int = Field(default=250, ge=25, le=1024)
    min_coarse_dim: int = Field(default=25, ge=11, le=128)
    sr_mode: bool = False
    sr_factor: int = Field(default=4, ge=1, le=8)
    padding: str = Field(default="input", pattern="^(layer|input|noise)$")
    name: Optional[str] = Field(default=None, max_length=80)


class JobCreated(BaseModel):
    job_id: str


class LossRow(BaseModel):
    iteration: int
    scale: int
    d_loss: float
    g_adv: float
    g_rec: float
    sigma: float


class JobStatus(BaseModel):
    job_id: str
    state: str  # queued | running | done | failed
    scale: Optional[int] = None
    iter: Optional[int] = None
    num_scales: Optional[int] = None
    iters_per_scale: Optional[int] = None
    model_id: Optional[str] = None
    error: Optional[str] = None
    losses: list[LossRow] = []
    next_index: int = 0


class ModelSummary(BaseModel):
    model_id: str
    name: Optional[str] = None
    coarsest_index: int
    levels: list[list[int]]


class SampleBody(BaseModel):
    start_scale: Optional[int] = Field(default=None, ge=0)
    width: Optional[int] = Field(default=None, ge=11, le=4096)
    height: Optional[int] = Field(default=None, ge=11, le=4096)
    count: int = Field(default=1, ge=1, le=64)
    seed: Optional[int] = Field(default=None, ge=0)
    padding: str = Field(default="input", pattern="^(layer|input|noise)$")


class SampleResult(BaseModel):
    images: list[str]
    etag: str
    seed: int


class InjectResult(BaseModel):
    image: str
    scale: int
    preset: Optional[str] = None


class AnimateBody(BaseModel):
    alpha: float = Field(ge=0.0, le=1.0)
    beta: float = Field(ge=0.0, le=1.0)
    start_scale: Optional[int] = Field(default=None, ge=0)
    frames: int = Field(default=30, ge=1, le=300)
    seed: int = Field(default=0, ge=0)
    fps: int = Field(default=10, ge=1, le=60)


class AnimateResult(BaseModel):
    frames: list[str]
    gif: Optional[str] = None
