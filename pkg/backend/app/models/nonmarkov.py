from enum import Enum
from typing import Any

import numpy as np
from pydantic import Field, model_validator

from .base import FrozenModel
from .channel import DensityMatrix


class PairName(str, Enum):
    """Named state-pair sets for the trace-distance diagnostics"""
    PM = "pm"        # |+>, |->
    ZO = "zo"        # |0>, |1>
    PMI = "pmi"      # |+i>, |-i>
    ALL = "all"      # the three above
    GRID = "grid"    # antipodal Bloch-grid search


class RhpSample(FrozenModel):
    """Divisibility violation rate q(t) split by channel"""
    t: float
    q_dis: float = Field(..., ge=0.0)
    q_deph: float = Field(..., ge=0.0)
    q_total: float = Field(..., ge=0.0)


class RhpSummary(FrozenModel):
    """Integrated divisibility violation up to a finite horizon"""
    eta: float = Field(..., ge=0.0, description="Integral of q(t) over [0, horizon]")
    g_measure: float = Field(..., ge=0.0, lt=1.0, description="eta / (eta + 1)")
    horizon: float
    undefined_fraction: float = Field(default=0.0, description="Share of grid samples skipped")


class RhpTrace(FrozenModel):
    times: np.ndarray
    q_dis: np.ndarray
    q_deph: np.ndarray
    q_total: np.ndarray
    defined: np.ndarray


class StatePair(FrozenModel):
    """Two initial states and their population/coherence differences"""
    rho1: DensityMatrix
    rho2: DensityMatrix
    a: float = Field(default=None, description="rho1_11(0) - rho2_11(0)")
    b: complex = Field(default=None, description="rho1_12(0) - rho2_12(0)")
    label: str = ""

    @model_validator(mode="before")
    @classmethod
    def _differences(cls, data: Any) -> Any:
        if isinstance(data, dict):
            data = dict(data)
            rho1, rho2 = data["rho1"], data["rho2"]
            a = rho1.rho11 - rho2.rho11
            b = rho1.rho12 - rho2.rho12
            if data.get("a") is not None and data["a"] != a:
                raise ValueError("a does not match rho1, rho2")
            if data.get("b") is not None and complex(data["b"]) != b:
                raise ValueError("b does not match rho1, rho2")
            data["a"], data["b"] = a, b
        return data

    @classmethod
    def of(cls, rho1: DensityMatrix, rho2: DensityMatrix, label: str = "") -> "StatePair":
        return cls.build(rho1=rho1, rho2=rho2, label=label)


class BlpTrace(FrozenModel):
    """Trace distance D(t) and its derivative p(t) for one pair"""
    times: np.ndarray
    distance: np.ndarray
    p: np.ndarray
    defined: np.ndarray
