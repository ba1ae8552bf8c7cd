from __future__ import annotations

import logging
from datetime import datetime
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, model_validator

logger = logging.getLogger(__name__)

# Soglia oltre la quale u_{0,1} non e' piu' "<< 1"
U01_WARNING_THRESHOLD = 0.1

Quad = Tuple[NonNegativeFloat, NonNegativeFloat, NonNegativeFloat, NonNegativeFloat]


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class AggregationParams(_Frozen):
    """Coalescenza, diffusione, clearance e sorgenti di tau."""

    alpha: float = Field(10.0, ge=0, description="α, Aβ coalescence rate")
    gamma: float = Field(4.0, ge=0, description="γ, τ coalescence rate")
    d: Quad = Field((1.0, 1 / 2, 1 / 3, 1 / 4), description="d_i, diffusivities i=1..4")
    sigma: Quad = Field((1.0, 1 / 2, 1 / 3, 1 / 4), description="σ_i, Aβ clearance i=1..4")
    epsilon: float = Field(0.1, gt=0, description="ε, Aβ time-scale factor")
    c_seed: float = Field(0.05, ge=0, description="c, τ seeding amplitude")
    lambda_seed: float = Field(10.0, gt=0, description="λ, seeding time scale")
    c_tau: float = Field(10.0, ge=0, description="C_τ, Aβ oligomer → τ coupling")
    u_bar: float = Field(0.001, ge=0, description="Ū, coupling threshold")


class DeteriorationParams(_Frozen):
    """Costanti della velocita' di deterioramento v[f] e della sorgente F(f)."""

    c_g: float = Field(0.1, ge=0, description="C_𝒢, peer-influence rate")
    c_s: float = Field(0.01, ge=0, description="C_S, Aβ toxicity")
    c_t: float = Field(0.01, ge=0, description="C_T, τ toxicity")
    u_bar_abeta: float = Field(0.001, ge=0, description="Ū_Aβ, Aβ toxicity threshold")
    u_bar_tau: float = Field(0.001, ge=0, description="Ū_τ, τ toxicity threshold")
    c_f: float = Field(10.0, ge=0, description="C_𝓕, Aβ source amplitude")
    mu0: float = Field(0.01, ge=0, description="μ₀, baseline production of healthy neurons")


class HealthGridConfig(_Frozen):
    grid_m: int = Field(64, ge=2, description="M, cells on the malfunction axis")
    a0: float = Field(0.01, ge=0, le=1, description="a₀, mean of the healthy f₀")
    sigma_a: float = Field(0.005, gt=0, description="σ_a, width of the healthy f₀")


class IntegratorConfig(_Frozen):
    t_end: float = Field(50.0, gt=0)
    dt_init: float = Field(0.01, gt=0)
    dt_min: float = Field(1e-7, gt=0)
    dt_max: float = Field(0.05, gt=0)
    cfl_max: float = Field(0.9, gt=0, le=1)
    snapshot_interval: float = Field(0.25, gt=0)
    mode: Literal["adaptive", "fixed"] = "adaptive"

    @model_validator(mode="after")
    def _check_steps(self) -> "IntegratorConfig":
        if not self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError(
                f"need dt_min <= dt_init <= dt_max, got "
                f"{self.dt_min} / {self.dt_init} / {self.dt_max}"
            )
        return self


class GraphSource(_Frozen):
    """Da dove arriva il grafo: file GraphML, coppia di CSV o generatore sintetico."""

    kind: Literal["synthetic", "graphml", "csv"] = "synthetic"
    path: Optional[str] = None
    nodes_path: Optional[str] = None
    edges_path: Optional[str] = None
    num_vertices: int = Field(100, ge=3)
    num_regions: int = Field(10, ge=3)
    rng_seed: int = 7
    cutoff_radius: Optional[float] = Field(None, gt=0)
    decay_scale: Optional[float] = Field(None, gt=0)
    merge_hemispheres: bool = False

    @model_validator(mode="after")
    def _check_kind(self) -> "GraphSource":
        if self.kind == "graphml" and not self.path:
            raise ValueError("graph kind 'graphml' needs a path")
        if self.kind == "csv" and not (self.nodes_path and self.edges_path):
            raise ValueError("graph kind 'csv' needs nodes_path and edges_path")
        if self.kind == "synthetic" and self.num_vertices < self.num_regions:
            raise ValueError("synthetic graph needs num_vertices >= num_regions")
        return self

    def describe(self) -> str:
        if self.kind == "graphml":
            return f"graphml:{self.path}"
        if self.kind == "csv":
            return f"csv:{self.nodes_path},{self.edges_path}"
        return (
            f"synthetic:N={self.num_vertices},regions={self.num_regions},"
            f"seed={self.rng_seed}"
        )


class ScenarioConfig(_Frozen):
    case_name: str = "C"
    u01: float = Field(0.01, ge=0, description="u_{0,1}, initial Aβ monomer level")
    aggregation: AggregationParams = AggregationParams()
    deterioration: DeteriorationParams = DeteriorationParams()
    health: HealthGridConfig = HealthGridConfig()
    integrator: IntegratorConfig = IntegratorConfig()
    graph: GraphSource = GraphSource()

    @model_validator(mode="after")
    def _warn_u01(self) -> "ScenarioConfig":
        if self.u01 > U01_WARNING_THRESHOLD:
            logger.warning(
                "u01=%.4g is not much smaller than 1 (threshold %.2g)",
                self.u01,
                U01_WARNING_THRESHOLD,
            )
        return self


class RunMetadata(BaseModel):
    artifact_version: str
    case_name: str
    graph_source: str
    num_vertices: int
    num_regions: int
    num_conn_edges: int
    num_prox_edges: int
    seed_vertices: List[int]
    config: ScenarioConfig
    wall_time_s: float
    steps: int
    rejected_steps: int
    clamp_count: int
    final_disease_index: float
    region_ranking: List[Tuple[str, float]]
    created_at: datetime


class CaseSummary(BaseModel):
    """Riga della tabella di ranking di uno sweep."""

    case_name: str
    status: Literal["ok", "failed"] = "ok"
    final_disease_index: Optional[float] = None
    final_seed_index: Optional[float] = None
    final_plaques: Optional[float] = None
    final_tangles: Optional[float] = None
    error: Optional[str] = None
