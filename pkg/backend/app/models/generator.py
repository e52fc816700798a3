from typing import Dict

import numpy as np
from pydantic import Field

from .base import FrozenModel

# Index of each Pauli-basis element {I, sx, sy, sz}/sqrt(2)
BASIS_INDEX: Dict[str, int] = {"0": 0, "x": 1, "y": 2, "z": 3}


class GeneratorMatrix(FrozenModel):
    """Time-local generator L(t) = dF/dt F^-1 in the normalised Pauli basis"""
    t: float
    entries: np.ndarray = Field(..., description="4x4 real matrix L_kl")

    def __getitem__(self, key: str) -> float:
        """L['xy'] style access by basis labels"""
        row, col = key
        return float(self.entries[BASIS_INDEX[row], BASIS_INDEX[col]])


class RateSet(FrozenModel):
    """Canonical Lindblad rates and induced sigma_z drive at one time"""
    t: float
    gamma_dis: float = Field(..., description="Dissipation rate")
    gamma_abs: float = Field(..., description="Absorption rate")
    gamma_deph: float = Field(..., description="Dephasing rate")
    u_rate: float = Field(..., description="Coefficient U(t) of the H(t) = U sigma_z drive")


class RateTrace(FrozenModel):
    """Rates over a grid; undefined samples (singular map) are NaN with defined=False"""
    times: np.ndarray
    gamma_dis: np.ndarray
    gamma_abs: np.ndarray
    gamma_deph: np.ndarray
    u_rate: np.ndarray
    defined: np.ndarray = Field(..., description="Boolean mask of samples where L(t) exists")

    def at(self, i: int) -> RateSet:
        return RateSet(
            t=float(self.times[i]),
            gamma_dis=float(self.gamma_dis[i]),
            gamma_abs=float(self.gamma_abs[i]),
            gamma_deph=float(self.gamma_deph[i]),
            u_rate=float(self.u_rate[i]),
        )

    @property
    def undefined_fraction(self) -> float:
        return float(1.0 - np.mean(self.defined)) if len(self.times) else 0.0


class CPIntegralReport(FrozenModel):
    """Running integrals of the rates; complete positivity needs all >= 0"""
    times: np.ndarray
    dis_integral: np.ndarray = Field(..., description="-1/2 ln(A - B)")
    deph_integral: np.ndarray = Field(..., description="1/4 ln((A - B)/|C|^2)")
    min_dis: float
    min_deph: float
    satisfied: bool
