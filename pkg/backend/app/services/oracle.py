import logging
from functools import lru_cache, reduce
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import linalg

from app.core.config import settings
from app.core.exceptions import InvalidParameters, SingularMap, SpinBathError, StepFailure
from app.models.bath import BathParams, MapCoefficients
from app.models.channel import DensityMatrix, tomography_inputs
from app.models.oracle import DiscrepancyReport, FullStateLayout, Trajectory, TrajectoryMethod
from app.services.channel import apply_kraus, kraus_set
from app.services.generator import rate_trace
from app.services.operators import IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z
from app.services.spin_bath import check_times, coefficient_trace

logger = logging.getLogger(__name__)


def _embed(ops: Dict[int, np.ndarray], n_sites: int) -> np.ndarray:
    """Tensor product of ops on the given sites of a qubit register, site 0 = central spin"""
    factors = [ops.get(site, IDENTITY) for site in range(n_sites)]
    return reduce(np.kron, factors)


class BruteForceOracle:
    """Dense diagonalisation of H = (omega0/2) sz_0 + (alpha/4) sum_i s_0 . s_i.

    The bath starts maximally mixed; reduced states are obtained by evolving
    rho_S x I/2^N and tracing the bath out.
    """

    def __init__(self, params: BathParams, cap: Optional[int] = None):
        self.layout = FullStateLayout.build(N=params.N, cap=cap or settings.ORACLE_MAX_SPINS)
        self.params = params
        n_sites = params.N + 1

        H = 0.5 * params.omega0 * _embed({0: SIGMA_Z}, n_sites)
        for site in range(1, n_sites):
            for sigma in (SIGMA_X, SIGMA_Y, SIGMA_Z):
                H = H + 0.25 * params.alpha * _embed({0: sigma, site: sigma}, n_sites)
        self.hamiltonian = H
        self.energies, self.vectors = linalg.eigh(H)

        half_z = 0.5 * _embed({0: SIGMA_Z}, n_sites)
        self.total_jz = sum((_embed({s: SIGMA_Z}, n_sites) * 0.5 for s in range(1, n_sites)), half_z)
        logger.info(f"Brute-force oracle N={params.N}: dimension {self.layout.dimension}")

    def initial_state(self, rho0: DensityMatrix) -> np.ndarray:
        bath = np.eye(self.layout.bath_dimension) / self.layout.bath_dimension
        return np.kron(rho0.matrix, bath)

    def propagator(self, t: float) -> np.ndarray:
        return (self.vectors * np.exp(-1j * self.energies * t)) @ self.vectors.conj().T

    def full_state(self, rho0: DensityMatrix, t: float, U: Optional[np.ndarray] = None) -> np.ndarray:
        U = self.propagator(t) if U is None else U
        return U @ self.initial_state(rho0) @ U.conj().T

    def reduce(self, rho_full: np.ndarray) -> np.ndarray:
        d = self.layout.bath_dimension
        return np.einsum("ajbj->ab", rho_full.reshape(2, d, 2, d))

    def reduced_state(self, rho0: DensityMatrix, t: float) -> np.ndarray:
        return self.reduce(self.full_state(rho0, t))

    def reduced_derivative(self, rho_full: np.ndarray) -> np.ndarray:
        """Tr_B(-i[H, rho])"""
        return self.reduce(-1j * (self.hamiltonian @ rho_full - rho_full @ self.hamiltonian))

    def coefficients(self, t: float) -> MapCoefficients:
        """A, B and C (co-rotating frame) with exact derivatives from the full commutator"""
        named = DensityMatrix.named
        U = self.propagator(t)
        full_0 = self.full_state(named("0"), t, U)
        full_1 = self.full_state(named("1"), t, U)
        full_p = self.full_state(named("+"), t, U)

        phase = np.exp(1j * self.params.omega0 * t)
        rho12 = self.reduce(full_p)[0, 1]
        d_rho12 = self.reduced_derivative(full_p)[0, 1]
        C = 2 * phase * rho12
        dC = 2 * phase * (d_rho12 + 1j * self.params.omega0 * rho12)
        return MapCoefficients(
            t=t,
            A=float(self.reduce(full_0)[0, 0].real),
            B=float(self.reduce(full_1)[0, 0].real),
            C_re=float(C.real), C_im=float(C.imag),
            dA=float(self.reduced_derivative(full_0)[0, 0].real),
            dB=float(self.reduced_derivative(full_1)[0, 0].real),
            dC_re=float(dC.real), dC_im=float(dC.imag),
        )


@lru_cache(maxsize=8)
def get_oracle(params: BathParams, cap: Optional[int] = None) -> BruteForceOracle:
    return BruteForceOracle(params, cap)


def brute_force_map(params: BathParams, t: float, cap: Optional[int] = None) -> MapCoefficients:
    """Map coefficients by exact diagonalisation; raises DimensionCap above the cap"""
    return get_oracle(params, cap).coefficients(float(check_times([t])[0]))


def brute_force_state(params: BathParams, rho0: DensityMatrix, t: float,
                      cap: Optional[int] = None, co_rotating: bool = True) -> DensityMatrix:
    """Reduced central-spin state; co_rotating removes the free e^{-i omega0 t} phase of rho12"""
    reduced = get_oracle(params, cap).reduced_state(rho0, float(check_times([t])[0]))
    if co_rotating:
        phase = np.exp(1j * params.omega0 * t)
        reduced = reduced * np.array([[1.0, phase], [np.conj(phase), 1.0]])
    return DensityMatrix.from_matrix(reduced, tol=1e-9)


def total_jz_expectation(params: BathParams, rho0: DensityMatrix, t: float, cap: Optional[int] = None) -> float:
    """<J_z> of central spin plus bath, conserved by H"""
    oracle = get_oracle(params, cap)
    return float(np.trace(oracle.total_jz @ oracle.full_state(rho0, t)).real)


def _bloch_rhs(gamma_dis: np.ndarray, gamma_deph: np.ndarray, u_rate: np.ndarray) -> Callable:
    def rhs(k: int, r: np.ndarray) -> np.ndarray:
        transverse = gamma_dis[k] + 2 * gamma_deph[k]
        x, y, z = r[:, 0], r[:, 1], r[:, 2]
        return np.stack([
            -transverse * x - 2 * u_rate[k] * y,
            2 * u_rate[k] * x - transverse * y,
            -2 * gamma_dis[k] * z,
        ], axis=1)
    return rhs


def _rk4(rhs: Callable, r: np.ndarray, h: float, k0: int, k_mid: int, k1: int) -> np.ndarray:
    """Classic RK4 with the rates sampled at the indices of t, t+h/2, t+h"""
    s1 = rhs(k0, r)
    s2 = rhs(k_mid, r + 0.5 * h * s1)
    s3 = rhs(k_mid, r + 0.5 * h * s2)
    s4 = rhs(k1, r + h * s3)
    return r + h / 6 * (s1 + 2 * s2 + 2 * s3 + s4)


class MasterEquationIntegrator:
    """RK4 for the Bloch vectors of the time-local master equation.

    With a tolerance, every step is compared against two half steps and
    halved until the two agree; without one the grid step is used as is.
    """

    def __init__(self, params: BathParams, tolerance: Optional[float] = None, max_halvings: Optional[int] = None):
        self.params = params
        self.tolerance = tolerance
        self.max_halvings = settings.RK4_MAX_HALVINGS if max_halvings is None else max_halvings

    def _rhs_at(self, times: np.ndarray) -> Callable:
        rates = rate_trace(self.params, times)
        if not rates.defined.all():
            i = int(np.flatnonzero(~rates.defined)[0])
            raise SingularMap(float(times[i]), 0.0, "A-B or C")
        return _bloch_rhs(rates.gamma_dis, rates.gamma_deph, rates.u_rate)

    def _fixed_step(self, r: np.ndarray, t0: float, t1: float) -> np.ndarray:
        rhs = self._rhs_at(np.array([t0, 0.5 * (t0 + t1), t1]))
        return _rk4(rhs, r, t1 - t0, 0, 1, 2)

    def _controlled_step(self, r: np.ndarray, t0: float, t1: float, depth: int = 0) -> np.ndarray:
        h = t1 - t0
        rhs = self._rhs_at(t0 + h * np.array([0.0, 0.25, 0.5, 0.75, 1.0]))
        full = _rk4(rhs, r, h, 0, 2, 4)
        half = _rk4(rhs, _rk4(rhs, r, 0.5 * h, 0, 1, 2), 0.5 * h, 2, 3, 4)
        error = float(np.max(np.abs(full - half)))
        if error <= self.tolerance:
            return half
        if depth >= self.max_halvings:
            raise StepFailure(t0, error)
        mid = 0.5 * (t0 + t1)
        return self._controlled_step(self._controlled_step(r, t0, mid, depth + 1), mid, t1, depth + 1)

    def integrate(self, bloch0: np.ndarray, times) -> np.ndarray:
        """Bloch vectors (n_times, n_states, 3) for every initial vector in bloch0"""
        times = check_times(times)
        if len(times) > 1 and np.any(np.diff(times) <= 0):
            raise InvalidParameters("Integration grid must be strictly increasing")
        r = np.atleast_2d(np.asarray(bloch0, dtype=float))
        out = np.empty((len(times),) + r.shape)
        out[0] = r
        step = self._fixed_step if self.tolerance is None else self._controlled_step
        for i in range(1, len(times)):
            r = step(r, float(times[i - 1]), float(times[i]))
            out[i] = r
        return out


def integrate_master_equation(params: BathParams, rho0: DensityMatrix, t_grid,
                              tolerance: Optional[float] = settings.RK4_TOLERANCE,
                              max_halvings: Optional[int] = None) -> Trajectory:
    """Solve the time-local master equation from rho0 on t_grid; tolerance=None for fixed steps"""
    times = check_times(t_grid)
    bloch = MasterEquationIntegrator(params, tolerance, max_halvings).integrate(np.array(rho0.bloch), times)
    return Trajectory(times=times, bloch=bloch[:, 0, :], method=TrajectoryMethod.ODE)


def _exact_bloch(params: BathParams, inputs: Sequence[DensityMatrix], times: np.ndarray) -> np.ndarray:
    coeffs = coefficient_trace(params, times)
    out = np.empty((len(times), len(inputs), 3))
    for k, rho in enumerate(inputs):
        x0, y0, z0 = rho.bloch
        transverse = coeffs.C * complex(x0, -y0)
        out[:, k, 0] = transverse.real
        out[:, k, 1] = -transverse.imag
        out[:, k, 2] = coeffs.contraction * z0 + (coeffs.A + coeffs.B - 1.0)
    return out


def _kraus_bloch(params: BathParams, inputs: Sequence[DensityMatrix], times: np.ndarray) -> np.ndarray:
    coeffs = coefficient_trace(params, times)
    out = np.empty((len(times), len(inputs), 3))
    for i in range(len(times)):
        kraus = kraus_set(coeffs.at(i))
        for k, rho in enumerate(inputs):
            out[i, k] = apply_kraus(kraus, rho).bloch
    return out


def _brute_force_bloch(params: BathParams, inputs: Sequence[DensityMatrix], times: np.ndarray,
                       cap: Optional[int]) -> np.ndarray:
    out = np.empty((len(times), len(inputs), 3))
    for i, t in enumerate(times):
        for k, rho in enumerate(inputs):
            out[i, k] = brute_force_state(params, rho, float(t), cap).bloch
    return out


def exact_trajectory(params: BathParams, rho0: DensityMatrix, t_grid) -> Trajectory:
    times = check_times(t_grid)
    return Trajectory(times=times, bloch=_exact_bloch(params, [rho0], times)[:, 0, :],
                      method=TrajectoryMethod.EXACT_MAP)


def channel_discrepancy(params: BathParams, t_grid, cap: Optional[int] = None,
                        tolerance: Optional[float] = settings.RK4_TOLERANCE) -> DiscrepancyReport:
    """Max trace distance between exact map, Kraus, ODE and (small N) brute force.

    A method that fails is recorded in the report and the rest still run.
    """
    times = check_times(t_grid)
    inputs = tomography_inputs()
    cap = cap or settings.ORACLE_MAX_SPINS

    runners: Dict[TrajectoryMethod, Callable[[], np.ndarray]] = {
        TrajectoryMethod.EXACT_MAP: lambda: _exact_bloch(params, inputs, times),
        TrajectoryMethod.KRAUS: lambda: _kraus_bloch(params, inputs, times),
        TrajectoryMethod.ODE: lambda: MasterEquationIntegrator(params, tolerance).integrate(
            np.array([rho.bloch for rho in inputs]), times),
    }
    if params.N <= cap:
        runners[TrajectoryMethod.BRUTE_FORCE] = lambda: _brute_force_bloch(params, inputs, times, cap)

    results: Dict[str, np.ndarray] = {}
    errors: Dict[str, str] = {}
    for method, runner in runners.items():
        try:
            results[method.value] = runner()
        except SpinBathError as e:
            logger.error(f"{method.value} trajectory failed: {e}")
            errors[method.value] = str(e)

    names: List[str] = list(results)
    pairwise = {}
    for i, first in enumerate(names):
        for second in names[i + 1:]:
            distance = 0.5 * np.linalg.norm(results[first] - results[second], axis=-1)
            pairwise[f"{first}|{second}"] = float(distance.max())

    reference = TrajectoryMethod.EXACT_MAP.value
    per_method = {}
    if reference in results:
        per_method = {
            name: (0.0 if name == reference else pairwise[f"{reference}|{name}"])
            for name in names
        }
    report = DiscrepancyReport(pairwise=pairwise, per_method=per_method, errors=errors, methods=names)
    logger.info(f"Channel discrepancy N={params.N}, alpha={params.alpha}: max {report.max_discrepancy:.3e}")
    return report
