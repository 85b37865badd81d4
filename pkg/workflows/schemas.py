"""Pydantic schemas for run configuration, anisotropy/stabilizer/shape specs and run records."""

from __future__ import annotations

import math
from enum import Enum
from pathlib import Path
from typing import Annotated, ClassVar, List, Literal, Optional, Tuple, Union

from pydantic import AliasChoices, BaseModel, Field, field_validator, model_validator

import config


# ============================================================================
# Flow and Newton Settings
# ============================================================================

class FlowKind(str, Enum):
    """The three geometric flows driven by the same coupled (X, mu) system."""

    SURFACE_DIFFUSION = "surface_diffusion"
    CURVATURE_FLOW = "curvature_flow"
    AREA_CONSERVED = "area_conserved"


class NewtonSettings(BaseModel):
    tolerance: float = Field(default_factory=lambda: config.NEWTON_TOLERANCE, gt=0, description="Max-norm bound on the increment")
    residual_tolerance: float = Field(default_factory=lambda: config.RESIDUAL_TOLERANCE, gt=0, description="Bound on |residual| relative to each row scale")
    max_iterations: int = Field(default_factory=lambda: config.NEWTON_MAX_ITERATIONS, ge=1)
    predictor: bool = Field(default_factory=lambda: config.NEWTON_PREDICTOR, description="Extrapolate the starting iterate from the last two steps")


# ============================================================================
# Anisotropy Specs
# ============================================================================

class IsotropicSpec(BaseModel):
    kind: Literal["isotropic"] = "isotropic"


class CaseOneSpec(BaseModel):
    kind: Literal["case1"] = "case1"


class KFoldSpec(BaseModel):
    kind: Literal["kfold"] = "kfold"
    beta: float = Field(..., gt=-1, lt=1)
    k: int = Field(3, ge=1)
    phase: float = 0.0


class TableSpec(BaseModel):
    """gamma sampled at angles theta (n = (sin theta, -cos theta)), either inline or from a CSV file."""

    kind: Literal["table"] = "table"
    thetas: Optional[List[float]] = None
    values: Optional[List[float]] = None
    path: Optional[Path] = Field(None, validation_alias=AliasChoices("path", "file"), description="CSV with header theta,gamma")

    @model_validator(mode="after")
    def _one_source(self) -> "TableSpec":
        inline = self.thetas is not None and self.values is not None
        if inline == (self.path is not None):
            raise ValueError("table anisotropy needs either thetas+values or a path")
        if inline and len(self.thetas) != len(self.values):
            raise ValueError("thetas and values must have the same length")
        return self


AnisotropySpec = Annotated[
    Union[IsotropicSpec, CaseOneSpec, KFoldSpec, TableSpec],
    Field(discriminator="kind"),
]


# ============================================================================
# Stabilizer Specs
# ============================================================================

class AutoStabilizer(BaseModel):
    mode: Literal["auto"] = "auto"
    M_n: int = Field(default_factory=lambda: config.K0_POINTS, ge=1)
    grid: int = Field(default_factory=lambda: config.K0_GRID, ge=64)
    safety: float = Field(default_factory=lambda: config.K0_SAFETY, ge=1)
    subsamples: int = Field(default_factory=lambda: config.K0_SUBSAMPLES, ge=0)


class FileStabilizer(BaseModel):
    mode: Literal["file"] = "file"
    path: Path


class ConstantStabilizer(BaseModel):
    mode: Literal["constant"] = "constant"
    value: float = Field(..., ge=0)


StabilizerSpec = Annotated[
    Union[AutoStabilizer, FileStabilizer, ConstantStabilizer],
    Field(discriminator="mode"),
]


# ============================================================================
# Initial Shape Specs
# ============================================================================

class EllipseShape(BaseModel):
    kind: Literal["ellipse"] = "ellipse"
    a: float = Field(2.0, gt=0, description="Semi-axis along x")
    b: float = Field(0.5, gt=0, description="Semi-axis along y")


class CircleShape(BaseModel):
    kind: Literal["circle"] = "circle"
    r: float = Field(1.0, gt=0)


class FileShape(BaseModel):
    kind: Literal["file"] = "file"
    path: Path


ShapeSpec = Annotated[
    Union[EllipseShape, CircleShape, FileShape],
    Field(discriminator="kind"),
]


# ============================================================================
# Simulation Config
# ============================================================================

class SimConfig(BaseModel):
    """One run: flow, energy, discretization and output location."""

    flow: FlowKind = FlowKind.SURFACE_DIFFUSION
    anisotropy: AnisotropySpec = Field(default_factory=IsotropicSpec)
    N: int = Field(128, ge=8, description="Number of nodes; h = 1/N")
    tau: float = Field(..., gt=0)
    t_end: float = Field(..., gt=0)
    stabilizer: StabilizerSpec = Field(default_factory=AutoStabilizer)
    newton: NewtonSettings = Field(default_factory=NewtonSettings)
    implicit: bool = True
    literal_normal: bool = Field(False, description="Area-conserved flow only: use n^m instead of the half-step normal")
    initial_shape: ShapeSpec = Field(default_factory=EllipseShape)
    snapshot_every: int = Field(default_factory=lambda: config.SNAPSHOT_EVERY, ge=1)
    output_dir: Optional[Path] = None

    @field_validator("tau", "t_end")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    @model_validator(mode="after")
    def _t_end_covers_a_step(self) -> "SimConfig":
        if self.t_end < self.tau:
            raise ValueError(f"t_end ({self.t_end}) must be at least tau ({self.tau})")
        return self

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def n_steps(self) -> int:
        # ceil with slack so that t_end = k * tau in floating point gives exactly k steps
        return max(1, math.ceil(self.t_end / self.tau - 1e-9))

    def resolved_output_dir(self) -> Path:
        if self.output_dir is not None:
            return self.output_dir
        root = Path(config.OUTPUT_ROOT) if config.OUTPUT_ROOT else Path("runs")
        return root / f"{self.flow.value}_N{self.N}"

    @classmethod
    def from_json_file(cls, path: Union[str, Path]) -> "SimConfig":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))


# ============================================================================
# Run Records
# ============================================================================

class DiagnosticsRecord(BaseModel):
    """Indicators recorded after every step (and for the initial curve at step 0)."""

    step: int = Field(..., ge=0)
    t: float
    area: float = Field(..., gt=0)
    energy: float = Field(..., gt=0)
    rel_area_loss: float
    norm_energy: float
    mesh_ratio: float = Field(..., ge=1)
    newton_iters: int = Field(0, ge=0)

    CSV_COLUMNS: ClassVar[Tuple[str, ...]] = ("t", "area", "energy", "rel_area_loss", "norm_energy", "mesh_ratio", "newton_iters")

    def csv_row(self) -> list:
        return [getattr(self, name) for name in self.CSV_COLUMNS]


class RunSummary(BaseModel):
    flow: FlowKind
    anisotropy: str
    N: int
    tau: float
    t_end: float
    steps: int
    implicit: bool
    final_area: float
    final_energy: float
    max_abs_rel_area_loss: float
    monotone_energy: bool
    max_newton_iterations: int
    condition_forced: bool = False
