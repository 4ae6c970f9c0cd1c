"""Request/response models of the HTTP API."""

from __future__ import annotations

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class GenerateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=1)
    m: int = Field(ge=1)
    k: int = Field(ge=1)
    l: int = Field(ge=1)
    snr_db: Optional[float] = None
    seed: int = 0


class BlockSpan(BaseModel):
    start: int
    len: int


class LayoutInfo(BaseModel):
    n: int
    m: int
    k: int
    l: int
    snr_db: Optional[float]
    seed: int
    blocks: List[BlockSpan]


class GenerateResponse(BaseModel):
    A: List[List[float]]
    y: List[float]
    x_true: List[float]
    noise_variance: float
    layout: LayoutInfo


class RecoverRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    A: List[List[float]]
    y: List[float]
    algo: Literal["pcsbl", "sbl", "mrl1", "rl1", "l1"]
    sigma2: Optional[float] = Field(default=None, ge=0)
    learn_noise: bool = False
    beta: float = Field(default=1.0, ge=0.0, le=1.0)
    tol: float = Field(default=1e-6, gt=0)
    max_iters: int = Field(default=500, ge=1)
    noise_budget: Optional[float] = Field(default=None, ge=0)


class RecoverResponse(BaseModel):
    x_hat: List[float]
    iterations: int
    converged: bool
    sigma2_est: Optional[float] = None


class BenchRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    axis: Literal["m_over_n", "k"]
    points: List[float]
    n: int = Field(ge=1)
    k: int = Field(ge=1)
    l: int = Field(ge=1)
    m: Optional[int] = Field(default=None, ge=1)  # required for the k axis
    snr_db: Optional[float] = None
    algos: List[str]
    trials: int = Field(ge=1)
    seed: int = 0
    beta: float = Field(default=1.0, ge=0.0, le=1.0)


class TrialRecordModel(BaseModel):
    algorithm: str
    axis_value: float
    trial: int
    n: int
    m: int
    k: int
    l: int
    snr_db: Optional[float]
    seed: int
    nmse: float
    success: bool
    iterations: int
    wall_ms: float
    failed: bool
    instance_hash: str


class SummaryRow(BaseModel):
    algorithm: str
    axis_value: float
    success_rate: float
    mean_nmse: float
    trials: int


class BenchResponse(BaseModel):
    axis: str
    points: List[float]
    records: List[TrialRecordModel]
    summary: List[SummaryRow]
    config: Dict


class HealthResponse(BaseModel):
    status: str
    version: str
