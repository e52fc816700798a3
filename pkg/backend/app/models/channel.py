import math
from enum import Enum
from typing import Tuple

import numpy as np
from pydantic import Field, field_validator, model_validator

from .base import FrozenModel

STATE_TOL = 1e-12


class NamedState(str, Enum):
    """Named central-spin states (|0> is spin up, rho_11 = 1)"""
    ZERO = "0"
    ONE = "1"
    PLUS = "+"
    MINUS = "-"
    PLUS_I = "+i"
    MINUS_I = "-i"
    MIXED = "mixed"


_NAMED_BLOCH = {
    NamedState.ZERO: (0.0, 0.0, 1.0),
    NamedState.ONE: (0.0, 0.0, -1.0),
    NamedState.PLUS: (1.0, 0.0, 0.0),
    NamedState.MINUS: (-1.0, 0.0, 0.0),
    NamedState.PLUS_I: (0.0, 1.0, 0.0),
    NamedState.MINUS_I: (0.0, -1.0, 0.0),
    NamedState.MIXED: (0.0, 0.0, 0.0),
}


class DensityMatrix(FrozenModel):
    """Central-spin state [[rho11, rho12], [conj(rho12), 1 - rho11]].

    Hermiticity and unit trace hold by construction; positivity is validated.
    """
    rho11: float = Field(..., description="Population of |0>")
    rho12: complex = Field(..., description="Coherence <0|rho|1>")

    @field_validator("rho12", mode="before")
    @classmethod
    def _as_complex(cls, value) -> complex:
        return complex(value)

    @model_validator(mode="after")
    def _positive(self) -> "DensityMatrix":
        if not (math.isfinite(self.rho11) and math.isfinite(abs(self.rho12))):
            raise ValueError("entries must be finite")
        if self.rho11 < -STATE_TOL or self.rho11 > 1 + STATE_TOL:
            raise ValueError(f"population {self.rho11} outside [0, 1]")
        if self.determinant < -STATE_TOL:
            raise ValueError(f"not positive semidefinite (det {self.determinant:.3e})")
        return self

    @property
    def rho22(self) -> float:
        return 1.0 - self.rho11

    @property
    def rho21(self) -> complex:
        return self.rho12.conjugate()

    @property
    def determinant(self) -> float:
        return self.rho11 * self.rho22 - abs(self.rho12) ** 2

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.rho11, self.rho12], [self.rho21, self.rho22]], dtype=complex)

    @property
    def bloch(self) -> Tuple[float, float, float]:
        return (2 * self.rho12.real, -2 * self.rho12.imag, self.rho11 - self.rho22)

    @property
    def bloch_norm(self) -> float:
        """x = sqrt((rho11 - rho22)^2 + 4|rho12|^2)"""
        return math.sqrt((self.rho11 - self.rho22) ** 2 + 4 * abs(self.rho12) ** 2)

    @property
    def purity(self) -> float:
        return 0.5 * (1 + self.bloch_norm ** 2)

    @classmethod
    def from_bloch(cls, x: float, y: float, z: float) -> "DensityMatrix":
        return cls.build(rho11=0.5 * (1 + z), rho12=0.5 * complex(x, -y))

    @classmethod
    def named(cls, name) -> "DensityMatrix":
        return cls.from_bloch(*_NAMED_BLOCH[NamedState(name)])

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, tol: float = STATE_TOL) -> "DensityMatrix":
        """Validate a 2x2 array and clip round-off in trace and Hermiticity"""
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        if abs(m[1, 0] - np.conj(m[0, 1])) > tol or abs(m[0, 0].imag) > tol or abs(m[1, 1].imag) > tol:
            raise ValueError("matrix is not Hermitian")
        if abs(np.trace(m) - 1) > tol:
            raise ValueError(f"trace {np.trace(m).real} != 1")
        return cls.build(rho11=float(m[0, 0].real), rho12=complex(m[0, 1]))


def random_density_matrix(rng: np.random.Generator, mixed: bool = True) -> DensityMatrix:
    """Uniform in the Bloch ball (mixed) or on the sphere (pure)"""
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    r = rng.uniform() ** (1 / 3) if mixed else 1.0
    return DensityMatrix.from_bloch(*(r * v))


def tomography_inputs() -> Tuple[DensityMatrix, ...]:
    """|0>, |1>, |+>, |+i>: spans the 2x2 operator space"""
    return tuple(DensityMatrix.named(n) for n in ("0", "1", "+", "+i"))


def trace_distance(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """1/2 ||rho1 - rho2||_1 by direct eigensolve"""
    return float(0.5 * np.abs(np.linalg.eigvalsh(rho1.matrix - rho2.matrix)).sum())


class ChoiMatrix(FrozenModel):
    """(id x Phi)[|Phi+><Phi+|], ancilla first"""
    t: float
    matrix: np.ndarray = Field(..., description="4x4 complex Hermitian")

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


class KrausSet(FrozenModel):
    """Operator-sum representation rho -> sum_i K_i rho K_i^dagger"""
    t: float
    operators: Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    theta: float = Field(..., description="Phase of C(t)")

    def completeness(self) -> np.ndarray:
        """sum K^dagger K, the identity for a trace-preserving map"""
        return sum(k.conj().T @ k for k in self.operators)

    def unitality(self) -> np.ndarray:
        """sum K K^dagger, the identity for a unital map"""
        return sum(k @ k.conj().T for k in self.operators)
