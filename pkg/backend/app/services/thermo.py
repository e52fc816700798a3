import math
import logging
from typing import List, Tuple

import numpy as np
from scipy.integrate import trapezoid

from app.core.exceptions import PureStateSingularity
from app.models.bath import BathParams, CoefficientTrace
from app.models.channel import DensityMatrix
from app.models.generator import RateSet
from app.models.thermo import ThermoSample, ThermoTrace, LindbladSetHermitian, WitnessSummary
from app.services.operators import commutator, hs_norm_squared
from app.services.spin_bath import coefficient_trace, time_grid

logger = logging.getLogger(__name__)


def binary_entropy(x):
    """von Neumann entropy (nats) of a qubit with Bloch length x"""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    lam_plus = 0.5 * (1 + x)
    lam_minus = 0.5 * (1 - x)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lam_plus > 0, -lam_plus * np.log(lam_plus), 0.0)
        terms = terms + np.where(lam_minus > 0, -lam_minus * np.log(lam_minus), 0.0)
    return terms


def von_neumann_entropy(rho: DensityMatrix) -> float:
    return float(binary_entropy(rho.bloch_norm))


def relative_entropy_to_fixed_point(rho: DensityMatrix) -> float:
    """S(rho || I/2) = ln 2 - S(rho)"""
    return math.log(2.0) - von_neumann_entropy(rho)


def _artanh_over_x(x: np.ndarray) -> np.ndarray:
    small = x < 1e-8
    safe = np.where(small, 0.5, x)
    return np.where(small, 1.0, np.arctanh(safe) / safe)


def bloch_dynamics(coeffs: CoefficientTrace, rho0: DensityMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """x(t) and x dx/dt for the evolved state"""
    z0_sq = (rho0.rho11 - rho0.rho22) ** 2
    c0_sq = 4 * abs(rho0.rho12) ** 2
    contraction = coeffs.contraction
    x = np.sqrt(contraction ** 2 * z0_sq + coeffs.abs_C ** 2 * c0_sq)
    x_dx = contraction * coeffs.d_contraction * z0_sq + coeffs.d_abs_C_times_abs_C * c0_sq
    return x, x_dx


def _pure_limit(x_dx: np.ndarray) -> np.ndarray:
    """One-sided limit of sigma at x = 1: -inf if x grows, +inf if it shrinks"""
    return np.where(x_dx > 0, -np.inf, np.where(x_dx < 0, np.inf, 0.0))


def thermo_from_coefficients(coeffs: CoefficientTrace, rho0: DensityMatrix, eps: float) -> ThermoTrace:
    x, x_dx = bloch_dynamics(coeffs, rho0)
    pure = x >= 1.0 - eps
    x_open = np.clip(x, 0.0, 1.0 - eps)
    # 1/2 ln((1-x)/(1+x)) dx/dt = -artanh(x)/x * (x dx/dt)
    sigma = np.where(pure, _pure_limit(x_dx), -_artanh_over_x(x_open) * x_dx)
    if pure.any():
        logger.info(f"{int(pure.sum())} samples at a pure state; sigma reported as its one-sided limit")
    return ThermoTrace(
        times=coeffs.times,
        entropy=binary_entropy(x),
        sigma=sigma,
        bloch_x=x,
        purity=0.5 * (1 + x ** 2),
        purity_rate=x_dx,
        kappa=-sigma,
        pure=pure,
    )


def thermo_trace(params: BathParams, rho0: DensityMatrix, times) -> ThermoTrace:
    return thermo_from_coefficients(coefficient_trace(params, times), rho0, params.eps_degeneracy)


def thermo_sample(params: BathParams, rho0: DensityMatrix, t: float) -> ThermoSample:
    trace = thermo_trace(params, rho0, [t])
    if trace.pure[0]:
        x_dx = float(trace.purity_rate[0])
        raise PureStateSingularity(t, float(trace.bloch_x[0]), x_dx / max(float(trace.bloch_x[0]), 1e-300))
    return ThermoSample(
        t=t,
        entropy=float(trace.entropy[0]),
        sigma=float(trace.sigma[0]),
        bloch_x=float(trace.bloch_x[0]),
        purity=float(trace.purity[0]),
        purity_rate=float(trace.purity_rate[0]),
        kappa=float(trace.kappa[0]),
    )


def entropy_production_rate(params: BathParams, rho0: DensityMatrix, t: float) -> float:
    """sigma(t) = 1/2 ln((1-x)/(1+x)) dx/dt; raises PureStateSingularity at x = 1"""
    return thermo_sample(params, rho0, t).sigma


def entropy_flux(rates: RateSet, rho: DensityMatrix, inverse_temperature: float = 0.0) -> float:
    """J = beta Tr[H(t) Lambda[rho]].

    The bath sits at infinite temperature (beta = 0), so the flux vanishes and
    sigma reduces to dS/dt.
    """
    if inverse_temperature == 0.0:
        return 0.0
    # Only the dissipative part changes <sigma_z>: d<sz>/dt = -2 Gamma_dis <sz>
    _, _, z = rho.bloch
    return inverse_temperature * rates.u_rate * (-2.0 * rates.gamma_dis * z)


def entropy_rate_spectral(lind: LindbladSetHermitian, rho: DensityMatrix, eps: float = 1e-12) -> float:
    """dS/dt = 1/2 sum_jkl Gamma_j (l_k - l_l)(ln l_k - ln l_l) |<k|V_j|l>|^2"""
    lam, vecs = np.linalg.eigh(rho.matrix)
    if lam.min() <= eps:
        # x dx/dt = dP/dt; the state carries no time
        x = rho.bloch_norm
        raise PureStateSingularity(None, x, purity_rate(lind, rho) / x)
    log_lam = np.log(lam)
    weights = np.subtract.outer(lam, lam) * np.subtract.outer(log_lam, log_lam)
    total = 0.0
    for rate, op in zip(lind.rates, lind.operators):
        elements = vecs.conj().T @ op @ vecs
        total += rate * float(np.sum(weights * np.abs(elements) ** 2))
    return 0.5 * total


def quantumness(lind: LindbladSetHermitian, rho: DensityMatrix) -> List[float]:
    """Q_i = ||[V_i, rho]||_HS^2"""
    return [hs_norm_squared(commutator(op, rho.matrix)) for op in lind.operators]


def purity_rate(lind: LindbladSetHermitian, rho: DensityMatrix) -> float:
    """dP/dt = -sum_i Gamma_i Q_i"""
    return -sum(rate * q for rate, q in zip(lind.rates, quantumness(lind, rho)))


def witness_summary(params: BathParams, rho0: DensityMatrix, horizon: float, dt: float) -> WitnessSummary:
    """Integral of max(0, kappa) over the non-pure samples of [0, horizon]"""
    trace = thermo_trace(params, rho0, time_grid(horizon, dt))
    keep = ~trace.pure
    skipped = float(1.0 - np.mean(keep))
    if skipped:
        logger.warning(f"Entropy witness skips {skipped:.2%} pure-state samples")
    phi = float(trapezoid(np.maximum(trace.kappa[keep], 0.0), trace.times[keep])) if keep.sum() > 1 else 0.0
    return WitnessSummary(phi=phi, skipped_fraction=skipped)


def witness_phi(params: BathParams, rho0: DensityMatrix, horizon: float, dt: float) -> float:
    return witness_summary(params, rho0, horizon, dt).phi
