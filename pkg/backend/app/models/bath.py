import math
from typing import List

import numpy as np
from pydantic import Field, field_validator

from app.core.config import settings
from .base import FrozenModel


class BathParams(FrozenModel):
    """Physical configuration of the central spin and its bath plus numerical policy"""
    N: int = Field(..., ge=1, description="Number of bath spins")
    alpha: float = Field(..., description="Coupling strength, units of omega0")
    omega0: float = Field(default=1.0, gt=0.0, description="Central-spin level splitting, sets the time unit")
    eps_degeneracy: float = Field(
        default=settings.EPS_DEGENERACY, gt=0.0,
        description="Tolerance for near-singular denominators"
    )

    @field_validator("alpha", "omega0", "eps_degeneracy")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value


class SubspaceTerm(FrozenModel):
    """One conserved (j, m) block of the bath angular momentum"""
    j: float = Field(..., ge=0.0, description="Total bath angular momentum (half-integer)")
    m: float = Field(..., description="z-projection, -j <= m <= j")
    weight: float = Field(..., ge=0.0, le=1.0, description="N_j / 2^N")
    omega_plus: float = Field(..., description="Omega_+ detuning")
    omega_minus: float = Field(..., description="Omega_- detuning")
    mu_plus: float = Field(..., ge=0.0, description="Rabi frequency mu_+")
    mu_minus: float = Field(..., ge=0.0, description="Rabi frequency mu_-")
    b_plus: float = Field(..., ge=0.0, description="Raising ladder factor b_+")
    b_minus: float = Field(..., ge=0.0, description="Lowering ladder factor b_-")


class MapCoefficients(FrozenModel):
    """A(t), B(t), C(t) and their analytic time derivatives at one time"""
    t: float = Field(..., ge=0.0)
    A: float
    B: float
    C_re: float
    C_im: float
    dA: float
    dB: float
    dC_re: float
    dC_im: float

    @property
    def C(self) -> complex:
        return complex(self.C_re, self.C_im)

    @property
    def dC(self) -> complex:
        return complex(self.dC_re, self.dC_im)

    @property
    def abs_C(self) -> float:
        return math.hypot(self.C_re, self.C_im)

    @property
    def theta(self) -> float:
        """Phase of C, quadrant-correct"""
        return math.atan2(self.C_im, self.C_re)

    @property
    def contraction(self) -> float:
        """A - B, the population contraction factor"""
        return self.A - self.B

    @property
    def d_abs_C_times_abs_C(self) -> float:
        """|C| d|C|/dt = C_R dC_R + C_I dC_I"""
        return self.C_re * self.dC_re + self.C_im * self.dC_im

    def violations(self, tol: float = 1e-12) -> List[str]:
        """Names of the coefficient invariants that fail at this sample"""
        failed = []
        if abs(self.A + self.B - 1.0) >= tol:
            failed.append("unitality")
        if self.B < -1e-14 or self.A > 1.0 + tol or self.B > 1.0 + tol:
            failed.append("bounds")
        if self.A < self.abs_C - tol:
            failed.append("choi_positivity")
        if abs(self.dA + self.dB) >= 1e-10:
            failed.append("unitality_rate")
        return failed


class CoefficientTrace(FrozenModel):
    """Map coefficients over a whole time grid"""
    times: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray = Field(..., description="Complex coherence coefficient")
    dA: np.ndarray
    dB: np.ndarray
    dC: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def at(self, i: int) -> MapCoefficients:
        return MapCoefficients(
            t=float(self.times[i]),
            A=float(self.A[i]),
            B=float(self.B[i]),
            C_re=float(self.C[i].real),
            C_im=float(self.C[i].imag),
            dA=float(self.dA[i]),
            dB=float(self.dB[i]),
            dC_re=float(self.dC[i].real),
            dC_im=float(self.dC[i].imag),
        )

    @property
    def contraction(self) -> np.ndarray:
        return self.A - self.B

    @property
    def d_contraction(self) -> np.ndarray:
        return self.dA - self.dB

    @property
    def abs_C(self) -> np.ndarray:
        return np.abs(self.C)

    @property
    def d_abs_C_times_abs_C(self) -> np.ndarray:
        return self.C.real * self.dC.real + self.C.imag * self.dC.imag
