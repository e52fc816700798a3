import logging
from typing import Tuple

import numpy as np

from app.core.exceptions import InvalidParameters, SingularMap
from app.models.bath import BathParams, MapCoefficients, CoefficientTrace
from app.models.channel import DensityMatrix
from app.models.generator import GeneratorMatrix, RateSet, RateTrace, CPIntegralReport
from app.services.operators import (
    SIGMA_X, SIGMA_Y, SIGMA_Z, SIGMA_PLUS, SIGMA_MINUS,
    commutator, dissipator, to_pauli_vector, from_pauli_vector,
)
from app.services.spin_bath import map_coefficients, coefficient_trace

logger = logging.getLogger(__name__)

CP_TOLERANCE = 1e-10


def f_matrix_from(coeffs: MapCoefficients) -> np.ndarray:
    """F_kl = Tr[G_k Phi[G_l]] in the basis {I, sx, sy, sz}/sqrt(2)"""
    F = np.zeros((4, 4))
    F[0, 0] = 1.0
    F[1, 1] = F[2, 2] = coeffs.C_re
    F[1, 2] = coeffs.C_im
    F[2, 1] = -coeffs.C_im
    F[3, 0] = coeffs.A + coeffs.B - 1.0
    F[3, 3] = coeffs.A - coeffs.B
    return F


def f_matrix(params: BathParams, t: float) -> np.ndarray:
    return f_matrix_from(map_coefficients(params, t))


def _check_invertible(coeffs: MapCoefficients, eps: float, signed: bool = False) -> None:
    contraction = coeffs.A - coeffs.B
    if (contraction if signed else abs(contraction)) <= eps:
        raise SingularMap(coeffs.t, contraction, "A-B")
    if coeffs.abs_C <= eps:
        raise SingularMap(coeffs.t, coeffs.abs_C, "C")


def generator_from(coeffs: MapCoefficients, eps: float) -> GeneratorMatrix:
    """Closed-form entries of L(t) from the coefficients and their derivatives"""
    _check_invertible(coeffs, eps)
    c2 = coeffs.abs_C ** 2
    l_xx = coeffs.d_abs_C_times_abs_C / c2
    l_xy = (coeffs.C_re * coeffs.dC_im - coeffs.C_im * coeffs.dC_re) / c2
    l_zz = (coeffs.dA - coeffs.dB) / (coeffs.A - coeffs.B)
    # General form; vanishes for a unital map
    l_z0 = (coeffs.dA + coeffs.dB) + l_zz * (1.0 - coeffs.A - coeffs.B)

    L = np.zeros((4, 4))
    L[1, 1] = L[2, 2] = l_xx
    L[1, 2] = l_xy
    L[2, 1] = -l_xy
    L[3, 0] = l_z0
    L[3, 3] = l_zz
    return GeneratorMatrix(t=coeffs.t, entries=L)


def generator_matrix(params: BathParams, t: float) -> GeneratorMatrix:
    return generator_from(map_coefficients(params, t), params.eps_degeneracy)


def rates_from(coeffs: MapCoefficients, eps: float) -> RateSet:
    """Logarithmic-derivative forms of the canonical rates"""
    _check_invertible(coeffs, eps, signed=True)
    c2 = coeffs.abs_C ** 2
    d_log_contraction = (coeffs.dA - coeffs.dB) / (coeffs.A - coeffs.B)
    d_log_abs_c2 = 2 * coeffs.d_abs_C_times_abs_C / c2
    gamma = -0.5 * d_log_contraction
    phase_rate = (coeffs.C_re * coeffs.dC_im - coeffs.C_im * coeffs.dC_re) / c2
    return RateSet(
        t=coeffs.t,
        gamma_dis=gamma,
        gamma_abs=gamma,
        gamma_deph=0.25 * (d_log_contraction - d_log_abs_c2),
        u_rate=-0.5 * phase_rate,
    )


def canonical_rates(params: BathParams, t: float) -> RateSet:
    return rates_from(map_coefficients(params, t), params.eps_degeneracy)


def rates_from_trace(coeffs: CoefficientTrace, eps: float) -> RateTrace:
    """Vectorised canonical rates; singular samples become NaN instead of raising"""
    contraction = coeffs.contraction
    abs_c = coeffs.abs_C
    defined = (contraction > eps) & (abs_c > eps)

    with np.errstate(divide="ignore", invalid="ignore"):
        c2 = abs_c ** 2
        d_log_contraction = coeffs.d_contraction / contraction
        d_log_abs_c2 = 2 * coeffs.d_abs_C_times_abs_C / c2
        phase_rate = (coeffs.C.real * coeffs.dC.imag - coeffs.C.imag * coeffs.dC.real) / c2

    gamma = np.where(defined, -0.5 * d_log_contraction, np.nan)
    deph = np.where(defined, 0.25 * (d_log_contraction - d_log_abs_c2), np.nan)
    u_rate = np.where(defined, -0.5 * phase_rate, np.nan)

    n_undefined = int(np.count_nonzero(~defined))
    if n_undefined:
        logger.warning(f"{n_undefined} of {len(defined)} samples have a singular map")
    return RateTrace(
        times=coeffs.times, gamma_dis=gamma, gamma_abs=gamma.copy(),
        gamma_deph=deph, u_rate=u_rate, defined=defined,
    )


def rate_trace(params: BathParams, times) -> RateTrace:
    return rates_from_trace(coefficient_trace(params, times), params.eps_degeneracy)


def cp_integral_check(params: BathParams, t_grid) -> CPIntegralReport:
    """Running integrals of Gamma_dis and Gamma_deph, integrated in closed form"""
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or len(times) == 0 or times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise InvalidParameters("CP check needs a strictly increasing grid starting at 0")

    coeffs = coefficient_trace(params, times)
    contraction = coeffs.contraction
    abs_c = coeffs.abs_C
    eps = params.eps_degeneracy
    for values, name in ((contraction, "A-B"), (abs_c, "C")):
        bad = np.flatnonzero(values <= eps)
        if len(bad):
            i = int(bad[0])
            raise SingularMap(float(times[i]), float(values[i]), name)

    dis_integral = -0.5 * np.log(contraction)
    deph_integral = 0.25 * np.log(contraction / abs_c ** 2)
    min_dis, min_deph = float(dis_integral.min()), float(deph_integral.min())
    satisfied = min_dis >= -CP_TOLERANCE and min_deph >= -CP_TOLERANCE
    if not satisfied:
        logger.warning(f"CP integral condition violated: min dis {min_dis:.3e}, min deph {min_deph:.3e}")
    return CPIntegralReport(
        times=times, dis_integral=dis_integral, deph_integral=deph_integral,
        min_dis=min_dis, min_deph=min_deph, satisfied=satisfied,
    )


def effective_hamiltonian(rates: RateSet) -> np.ndarray:
    """H(t) = U(t) sigma_z generated by the bath"""
    return rates.u_rate * SIGMA_Z


def master_equation_rhs(rates: RateSet, rho: np.ndarray, form: str = "canonical") -> np.ndarray:
    """drho/dt of the time-local master equation.

    "canonical": U-drive plus dissipation (sigma_-), absorption (sigma_+) and
    dephasing (sigma_z). "hermitian": the same generator written with Pauli
    jump operators at rates Gamma_dis/2, Gamma_dis/2, Gamma_deph.
    """
    drive = 1j * rates.u_rate * commutator(rho, SIGMA_Z)
    dephasing = rates.gamma_deph * (SIGMA_Z @ rho @ SIGMA_Z - rho)
    if form == "canonical":
        return (drive + dephasing
                + rates.gamma_dis * dissipator(SIGMA_MINUS, rho)
                + rates.gamma_abs * dissipator(SIGMA_PLUS, rho))
    if form == "hermitian":
        half = 0.5 * rates.gamma_dis
        return (drive + dephasing
                + half * (SIGMA_X @ rho @ SIGMA_X - rho)
                + half * (SIGMA_Y @ rho @ SIGMA_Y - rho))
    raise InvalidParameters(f"Unknown master equation form: {form}")


def generator_action(generator: GeneratorMatrix, rho: np.ndarray) -> np.ndarray:
    """drho/dt = sum_k (L v)_k G_k with v_k = Tr[G_k rho]"""
    return from_pauli_vector(generator.entries @ to_pauli_vector(rho))


def equations_of_motion(generator: GeneratorMatrix, rho: DensityMatrix) -> Tuple[float, complex]:
    """(drho11/dt, drho12/dt) read off from L(t)"""
    l_z0, l_zz = generator["z0"], generator["zz"]
    d_rho11 = 0.5 * (l_z0 + l_zz) * rho.rho11 + 0.5 * (l_z0 - l_zz) * rho.rho22
    d_rho12 = complex(generator["xx"], generator["xy"]) * rho.rho12
    return d_rho11, d_rho12
