import numpy as np

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# sigma_+ raises |1> to |0>
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)

# Orthonormal operator basis {I, sx, sy, sz}/sqrt(2)
PAULI_BASIS = tuple(op / np.sqrt(2) for op in (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def hs_norm_squared(a: np.ndarray) -> float:
    """||a||_HS^2 = Tr(a^dagger a)"""
    return float(np.real(np.trace(a.conj().T @ a)))


def dissipator(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """V rho V^dagger - 1/2 {V^dagger V, rho}"""
    return op @ rho @ op.conj().T - 0.5 * anticommutator(op.conj().T @ op, rho)


def to_pauli_vector(rho: np.ndarray) -> np.ndarray:
    """Real components Tr[G_k rho] in the normalised Pauli basis"""
    return np.array([np.real(np.trace(g @ rho)) for g in PAULI_BASIS])


def from_pauli_vector(v: np.ndarray) -> np.ndarray:
    return sum(c * g for c, g in zip(v, PAULI_BASIS))
