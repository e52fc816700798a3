import cmath
import math
import logging

import numpy as np

from app.core.exceptions import NotCompletelyPositive
from app.models.bath import BathParams, MapCoefficients
from app.models.channel import DensityMatrix, ChoiMatrix, KrausSet
from app.services.operators import PAULI_BASIS
from app.services.spin_bath import map_coefficients

logger = logging.getLogger(__name__)

CHOI_TOLERANCE = 1e-12
POPULATION_TOLERANCE = 1e-14


def evolve_with(coeffs: MapCoefficients, rho0: DensityMatrix) -> DensityMatrix:
    """rho11 -> A rho11 + B rho22, rho12 -> C rho12"""
    return DensityMatrix.build(
        rho11=coeffs.A * rho0.rho11 + coeffs.B * rho0.rho22,
        rho12=coeffs.C * rho0.rho12,
    )


def evolve_state(params: BathParams, rho0: DensityMatrix, t: float) -> DensityMatrix:
    return evolve_with(map_coefficients(params, t), rho0)


def choi_state(coeffs: MapCoefficients) -> ChoiMatrix:
    """Choi state with the ancilla as first tensor factor:
    [[A, 0, 0, C], [0, B, 0, 0], [0, 0, B, 0], [C*, 0, 0, A]] / 2
    """
    J = np.zeros((4, 4), dtype=complex)
    J[0, 0] = J[3, 3] = coeffs.A
    J[1, 1] = J[2, 2] = coeffs.B
    J[0, 3] = coeffs.C
    J[3, 0] = coeffs.C.conjugate()
    return ChoiMatrix(t=coeffs.t, matrix=J / 2)


def choi_to_map(choi: ChoiMatrix, rho: DensityMatrix) -> DensityMatrix:
    """Phi(rho) = 2 Tr_ancilla[(rho^T x I) J]"""
    J = choi.matrix.reshape(2, 2, 2, 2)
    out = 2 * np.einsum("ab,asbt->st", rho.matrix, J)
    return DensityMatrix.from_matrix(out, tol=1e-10)


def pauli_transfer_to_choi(F: np.ndarray) -> np.ndarray:
    """Choi matrix (ancilla first) of the map whose transfer matrix in the
    normalised Pauli basis is F"""
    J = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            E = np.zeros((2, 2), dtype=complex)
            E[i, j] = 1.0
            coords = np.array([np.trace(g @ E) for g in PAULI_BASIS])
            image = sum(c * g for c, g in zip(F @ coords, PAULI_BASIS))
            J += np.kron(E, image)
    return J / 2


def kraus_set(coeffs: MapCoefficients) -> KrausSet:
    """Kraus operators from the eigensystem of the Choi state"""
    abs_c = coeffs.abs_C
    if coeffs.A < abs_c - CHOI_TOLERANCE:
        raise NotCompletelyPositive("A >= |C|", coeffs.A - abs_c)
    if coeffs.B < -POPULATION_TOLERANCE:
        raise NotCompletelyPositive("B >= 0", coeffs.B)

    theta = coeffs.theta
    phase = cmath.exp(1j * theta)
    flip = math.sqrt(max(coeffs.B, 0.0))
    minus = math.sqrt(max(coeffs.A - abs_c, 0.0) / 2)
    plus = math.sqrt(max(coeffs.A + abs_c, 0.0) / 2)

    operators = (
        flip * np.array([[0, 1], [0, 0]], dtype=complex),
        flip * np.array([[0, 0], [1, 0]], dtype=complex),
        minus * np.array([[-phase, 0], [0, 1]], dtype=complex),
        plus * np.array([[phase, 0], [0, 1]], dtype=complex),
    )
    return KrausSet(t=coeffs.t, operators=operators, theta=theta)


def apply_kraus(kraus: KrausSet, rho: DensityMatrix) -> DensityMatrix:
    out = sum(k @ rho.matrix @ k.conj().T for k in kraus.operators)
    return DensityMatrix.from_matrix(out, tol=1e-10)
