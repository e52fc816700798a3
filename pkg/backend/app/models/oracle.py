from enum import Enum
from typing import Dict, List

import numpy as np
from pydantic import Field, model_validator

from app.core.config import settings
from app.core.exceptions import DimensionCap
from .base import FrozenModel


class TrajectoryMethod(str, Enum):
    """How a trajectory was produced"""
    EXACT_MAP = "exact-map"
    KRAUS = "kraus"
    ODE = "ode"
    BRUTE_FORCE = "brute-force"


class FullStateLayout(FrozenModel):
    """Central spin plus N bath spins in one dense Hilbert space"""
    N: int = Field(..., ge=1)
    cap: int = Field(default=settings.ORACLE_MAX_SPINS, ge=1)

    @model_validator(mode="after")
    def _within_cap(self) -> "FullStateLayout":
        if self.N > self.cap:
            raise DimensionCap(self.N, self.cap)
        return self

    @property
    def dimension(self) -> int:
        return 2 ** (self.N + 1)

    @property
    def bath_dimension(self) -> int:
        return 2 ** self.N


class Trajectory(FrozenModel):
    """Ordered central-spin states, stored as Bloch vectors"""
    times: np.ndarray
    bloch: np.ndarray = Field(..., description="(n_times, 3) Bloch vectors")
    method: TrajectoryMethod

    @model_validator(mode="after")
    def _ordered(self) -> "Trajectory":
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if self.bloch.shape != (len(self.times), 3):
            raise ValueError(f"bloch shape {self.bloch.shape} does not match {len(self.times)} times")
        return self

    @property
    def purity(self) -> np.ndarray:
        return 0.5 * (1 + np.sum(self.bloch ** 2, axis=1))

    def distance_to(self, other: "Trajectory") -> np.ndarray:
        """Trace distance per sample, 1/2 |r1 - r2| for qubits"""
        return 0.5 * np.linalg.norm(self.bloch - other.bloch, axis=1)


class DiscrepancyReport(FrozenModel):
    """Maximum trace distance between channel representations"""
    pairwise: Dict[str, float] = Field(default_factory=dict, description="'a|b' -> max distance")
    per_method: Dict[str, float] = Field(default_factory=dict, description="method -> max distance to exact map")
    errors: Dict[str, str] = Field(default_factory=dict, description="method -> failure message")
    methods: List[str] = Field(default_factory=list)

    @property
    def max_discrepancy(self) -> float:
        return max(self.pairwise.values(), default=0.0)
