from typing import Tuple

import numpy as np
from pydantic import Field, model_validator

from app.services.operators import SIGMA_X, SIGMA_Y, SIGMA_Z
from .base import FrozenModel
from .generator import RateSet


class ThermoSample(FrozenModel):
    """Entropy and purity diagnostics of the evolved state at one time (nats)"""
    t: float
    entropy: float = Field(..., ge=0.0, description="von Neumann entropy S")
    sigma: float = Field(..., description="Entropy production rate (= dS/dt, zero flux)")
    bloch_x: float = Field(..., ge=0.0, le=1.0 + 1e-12, description="Bloch vector length x")
    purity: float = Field(..., ge=0.5 - 1e-12, le=1.0 + 1e-12)
    purity_rate: float = Field(..., description="dP/dt")
    kappa: float = Field(..., description="-dS/dt")


class LindbladSetHermitian(FrozenModel):
    """Pauli jump operators with rates Gamma_dis/2, Gamma_dis/2, Gamma_deph"""
    operators: Tuple[np.ndarray, np.ndarray, np.ndarray]
    rates: Tuple[float, float, float]

    @model_validator(mode="after")
    def _hermitian_traceless(self) -> "LindbladSetHermitian":
        for op in self.operators:
            if not np.allclose(op, op.conj().T) or abs(np.trace(op)) > 1e-12:
                raise ValueError("Lindblad operators must be Hermitian and traceless")
        return self

    @classmethod
    def from_rates(cls, rates: RateSet) -> "LindbladSetHermitian":
        half = 0.5 * rates.gamma_dis
        return cls(operators=(SIGMA_X, SIGMA_Y, SIGMA_Z), rates=(half, half, rates.gamma_deph))


class ThermoTrace(FrozenModel):
    """Thermodynamic columns over a grid; pure-state samples are flagged"""
    times: np.ndarray
    entropy: np.ndarray
    sigma: np.ndarray
    bloch_x: np.ndarray
    purity: np.ndarray
    purity_rate: np.ndarray
    kappa: np.ndarray
    pure: np.ndarray = Field(..., description="Boolean mask of samples with x >= 1 - eps")


class WitnessSummary(FrozenModel):
    """Integrated positive -dS/dt for a fixed initial state"""
    phi: float = Field(..., ge=0.0)
    skipped_fraction: float = Field(..., ge=0.0, le=1.0)
