"""Pydantic request/response models for the tree-verification service."""

from __future__ import annotations

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field


class ModelParams(BaseModel):
    model: Literal["urt", "wrt", "hoppe", "thetak", "brt", "art"]
    weights: Optional[str] = Field(None, description="weight preset, e.g. hoppe:2")
    theta: Optional[float] = None
    k: Optional[int] = None
    a: Optional[int] = Field(None, description="uniform pile count")
    p: Optional[List[float]] = Field(None, description="pile probabilities")


class SampleRequest(BaseModel):
    model: ModelParams
    n: int = Field(ge=1)
    reps: int = Field(1, ge=1)
    seed: int = 0
    stat: Optional[str] = Field(None, description="statistic name; omit for trees")
    threads: int = Field(1, ge=1)


class SampleResponse(BaseModel):
    seed: int
    stat: Optional[str] = None
    values: Optional[List[float]] = None
    trees: Optional[List[str]] = None


class EnumerateRequest(BaseModel):
    model: ModelParams
    n: int = Field(ge=1)
    stat: Optional[str] = None


class EnumerateResponse(BaseModel):
    keys: List[str]
    probabilities: List[float]


class OracleRequest(BaseModel):
    name: str
    params: Dict[str, object] = Field(default_factory=dict)


class OracleResponse(BaseModel):
    value: float
    formula_id: str
    params: Dict[str, object]


class OracleInfo(BaseModel):
    formula_id: str
    args: List[str]
    doc: str


class OracleListResponse(BaseModel):
    formulas: List[OracleInfo]


class ExperimentRow(BaseModel):
    model: str
    params: str
    n: int
    stat: str
    R: int
    seed: int
    sample_mean: Optional[float] = None
    sample_var: Optional[float] = None
    oracle_mean: Optional[float] = None
    oracle_var: Optional[float] = None
    z_mean: Optional[float] = None
    d_K: Optional[float] = None
    tv: Optional[float] = None
    passed: bool = Field(alias="pass")

    model_config = {"populate_by_name": True}


class VerifyRequest(BaseModel):
    model: ModelParams
    stat: str
    n: int = Field(ge=2)
    reps: int = Field(1, ge=1)
    seed: int = 0
    mode: Literal[
        "oracle-moments", "exact-pmf", "normal-CLT", "concentration", "limit-constant"
    ] = "oracle-moments"
    threads: int = Field(1, ge=1)
    t_grid: Optional[List[float]] = None
    z_max: float = 4.0
    tv_max: float = 0.01
    ci_mult: float = 3.0
    dk_coeff: float = 3.0
    abs_tol: float = 0.01


class VerifyResponse(BaseModel):
    rows: List[ExperimentRow]
    all_passed: bool


class ConvergeRequest(BaseModel):
    model: ModelParams
    stat: str
    n_grid: List[int]
    reps: int = Field(1, ge=1)
    seed: int = 0
    threads: int = Field(1, ge=1)
    dk_coeff: float = 3.0


class ConvergeResponse(BaseModel):
    rows: List[ExperimentRow]
    bounded_variance: bool
    normality: str
    all_passed: bool


class CoupleRequest(BaseModel):
    kind: Literal["general", "thetak", "merge", "split", "inverse-merge"]
    n: int = Field(ge=2)
    reps: int = Field(1, ge=1)
    seed: int = 0
    weights: Optional[str] = None
    theta: Optional[float] = None
    k: Optional[int] = None
    m: Optional[int] = None
    stats: List[str] = Field(default_factory=lambda: ["leaves"])
    exact_tv_n: Optional[int] = Field(
        None, description="if set, also compare exact derived vs direct laws at this n"
    )


class CouplePairRow(BaseModel):
    rep: int
    values: Dict[str, float]


class CoupleResponse(BaseModel):
    kind: str
    rows: List[CouplePairRow]
    sandwich_violations: Dict[str, int]
    exact_tv: Optional[float] = None
    all_passed: bool
