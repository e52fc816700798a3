import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from app.core.config import settings
from app.core.exceptions import InvalidParameters
from .base import FrozenModel
from .bath import BathParams
from .channel import DensityMatrix, NamedState
from .nonmarkov import PairName


class CommandType(str, Enum):
    TRACE = "trace"
    RATES = "rates"
    NONMARKOV = "nonmarkov"
    THERMO = "thermo"
    VERIFY = "verify"
    SWEEP = "sweep"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class SampleFlag(str, Enum):
    """Per-row status written to the flags column"""
    OK = "ok"
    SINGULAR_MAP = "singular_map"
    PURE_STATE = "pure_state"


def parse_state(text: str) -> DensityMatrix:
    """A named state ("0", "1", "+", "-", "+i", "-i", "mixed") or a Bloch vector "x,y,z" """
    text = text.strip()
    if text in {s.value for s in NamedState}:
        return DensityMatrix.named(text)
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"initial state must be a named state or 'x,y,z', got {text!r}")
    return DensityMatrix.from_bloch(*(float(p) for p in parts))


class RunConfig(BaseModel):
    """One CLI or API run"""
    command: CommandType
    params: BathParams = Field(
        default_factory=lambda: BathParams(N=settings.DEFAULT_N_BATH, alpha=settings.DEFAULT_ALPHA,
                                           omega0=settings.DEFAULT_OMEGA0)
    )
    t_max: float = Field(default=settings.DEFAULT_T_MAX, gt=0.0)
    dt: float = Field(default=settings.DEFAULT_DT, gt=0.0)
    initial_state: str = Field(default="1", description="Named state or 'x,y,z' Bloch vector")
    pair: PairName = PairName.ALL
    output: Optional[Path] = Field(default=None, description="Artifact path, defaults under OUTPUT_DIR")
    format: OutputFormat = OutputFormat.CSV
    sweep_alpha: List[float] = Field(default_factory=list)
    sweep_n: List[int] = Field(default_factory=list)
    workers: int = Field(default=settings.DEFAULT_WORKERS, ge=1)
    seed: int = 0

    @field_validator("initial_state")
    @classmethod
    def _parsable_state(cls, value: str) -> str:
        parse_state(value)
        return value

    @field_validator("sweep_n")
    @classmethod
    def _positive_n(cls, value: List[int]) -> List[int]:
        if any(n < 1 for n in value):
            raise ValueError("bath sizes must be >= 1")
        return value

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        if self.t_max <= self.dt:
            raise ValueError(f"t_max ({self.t_max}) must exceed dt ({self.dt})")
        if self.command == CommandType.SWEEP and not (self.sweep_alpha or self.sweep_n):
            raise ValueError("sweep needs at least one of sweep_alpha, sweep_n")
        return self

    @property
    def rho0(self) -> DensityMatrix:
        return parse_state(self.initial_state)

    @property
    def output_path(self) -> Path:
        if self.output is not None:
            return Path(self.output)
        suffix = "json" if self.command == CommandType.VERIFY else self.format.value
        return Path(settings.OUTPUT_DIR) / f"{self.command.value}.{suffix}"

    def sweep_cells(self) -> List[BathParams]:
        """(N, alpha) grid in sorted order; a missing axis falls back to params"""
        alphas = sorted(set(self.sweep_alpha or [self.params.alpha]))
        sizes = sorted(set(self.sweep_n or [self.params.N]))
        return [
            BathParams.build(N=n, alpha=a, omega0=self.params.omega0,
                             eps_degeneracy=self.params.eps_degeneracy)
            for n in sizes for a in alphas
        ]


class SweepRow(FrozenModel):
    """Summary of one (alpha, N) cell"""
    N: int
    alpha: float
    eta: float
    g_measure: float
    blp_lower_bound: float
    phi: float
    min_gamma_dis: float
    rhp_undefined_fraction: float
    witness_skipped_fraction: float


class RunResult(BaseModel):
    """What a run produced"""
    command: CommandType
    exit_code: int = 0
    outputs: List[str] = Field(default_factory=list)
    summary: Dict[str, Any] = Field(default_factory=dict)


class DynamicsRequest(BaseModel):
    """HTTP body shared by the trace-style endpoints"""
    N: int = Field(default=settings.DEFAULT_N_BATH, ge=1, le=settings.MAX_N_BATH)
    alpha: float = settings.DEFAULT_ALPHA
    omega0: float = Field(default=settings.DEFAULT_OMEGA0, gt=0.0)
    t_max: float = Field(default=settings.DEFAULT_T_MAX, gt=0.0)
    dt: float = Field(default=settings.DEFAULT_DT, gt=0.0)
    initial_state: str = "1"
    pair: PairName = PairName.ALL
    seed: int = 0

    @model_validator(mode="after")
    def _grid_size(self) -> "DynamicsRequest":
        ratio = self.t_max / self.dt
        if not math.isfinite(ratio):
            raise ValueError(f"t_max/dt ratio is not finite for t_max={self.t_max}, dt={self.dt}")
        points = round(ratio) + 1
        if points > settings.MAX_GRID_POINTS:
            raise ValueError(f"grid of {points} points exceeds MAX_GRID_POINTS={settings.MAX_GRID_POINTS}")
        return self

    def to_config(self, command: CommandType, **extra: Any) -> RunConfig:
        try:
            return RunConfig(
                command=command,
                params=BathParams(N=self.N, alpha=self.alpha, omega0=self.omega0),
                t_max=self.t_max, dt=self.dt, initial_state=self.initial_state,
                pair=self.pair, seed=self.seed, **extra,
            )
        except ValidationError as e:
            raise InvalidParameters(f"Invalid run: {e.errors()[0]['msg']}") from e
