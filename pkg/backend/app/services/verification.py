import logging
from typing import Any, Callable, Dict

import numpy as np

from app.core.config import settings
from app.core.exceptions import SpinBathError
from app.models.bath import BathParams
from app.models.channel import DensityMatrix, random_density_matrix, tomography_inputs
from app.models.oracle import Trajectory, TrajectoryMethod
from app.models.thermo import LindbladSetHermitian
from app.services.channel import apply_kraus, choi_state, choi_to_map, evolve_with, kraus_set
from app.services.generator import (
    cp_integral_check, f_matrix_from, generator_action, generator_from, master_equation_rhs,
    rate_trace,
)
from app.services.nonmarkov import blp_trace, default_pairs, rhp_from_rates
from app.services.oracle import MasterEquationIntegrator, brute_force_map, exact_trajectory
from app.services.spin_bath import coefficient_trace, map_coefficients, time_grid
from app.services.thermo import entropy_rate_spectral, purity_rate, thermo_trace

logger = logging.getLogger(__name__)

# Suites run on [0, VERIFY_HORIZON] at most; the ODE suite always steps at ODE_DT
VERIFY_HORIZON = 100.0
ODE_DT = 0.01
# Samples with |A-B| or |C| below this are too close to a singular map for
# derivative-based cross-checks
CONDITION_FLOOR = 1e-3
# |Gamma_dis| guard band for the sign linkage
SIGN_GUARD = 1e-10

Suite = Callable[[BathParams, np.ndarray, np.random.Generator], Dict[str, Any]]


def _result(passed: bool, **details: Any) -> Dict[str, Any]:
    return {"passed": bool(passed), **{k: float(v) if isinstance(v, np.floating) else v for k, v in details.items()}}


def _well_conditioned(params: BathParams, times: np.ndarray) -> np.ndarray:
    coeffs = coefficient_trace(params, times)
    return times[(np.abs(coeffs.contraction) > CONDITION_FLOOR) & (coeffs.abs_C > CONDITION_FLOOR)]


def _invertible_prefix(params: BathParams, times: np.ndarray) -> np.ndarray:
    """Grid truncated before the first sample where the map is not invertible"""
    coeffs = coefficient_trace(params, times)
    bad = np.flatnonzero((coeffs.contraction <= params.eps_degeneracy) | (coeffs.abs_C <= params.eps_degeneracy))
    return times if not len(bad) else times[:bad[0]]


def unitality_suite(params: BathParams, times: np.ndarray, rng: np.random.Generator) -> Dict[str, Any]:
    coeffs = coefficient_trace(params, times)
    sum_error = float(np.max(np.abs(coeffs.A + coeffs.B - 1.0)))
    rate_error = float(np.max(np.abs(coeffs.dA + coeffs.dB)))
    choi_margin = float(np.min(coeffs.A - coeffs.abs_C))
    return _result(sum_error < 1e-12 and rate_error < 1e-10 and choi_margin >= -1e-12,
                   max_sum_error=sum_error, max_rate_error=rate_error, min_choi_margin=choi_margin)


def oracle_suite(params: BathParams, times: np.ndarray, rng: np.random.Generator) -> Dict[str, Any]:
    if params.N > settings.ORACLE_MAX_SPINS:
        return _result(True, skipped=f"N={params.N} above oracle cap {settings.ORACLE_MAX_SPINS}")
    samples = np.sort(rng.uniform(0.0, float(times[-1]), size=20))
    worst = 0.0
    failed = set()
    for t in samples:
        exact, brute = map_coefficients(params, float(t)), brute_force_map(params, float(t))
        worst = max(worst, abs(exact.A - brute.A), abs(exact.B - brute.B), abs(exact.C - brute.C))
        failed.update(exact.violations())
    return _result(worst < 1e-10 and not failed, max_discrepancy=worst, samples=len(samples),
                   coefficient_violations=sorted(failed))


def channel_suite(params: BathParams, times: np.ndarray, rng: np.random.Generator) -> Dict[str, Any]:
    coeffs = coefficient_trace(params, times)
    picks = np.linspace(0, len(times) - 1, min(100, len(times))).astype(int)
    worst_action = worst_completeness = 0.0
    min_choi = np.inf
    identity = np.eye(2)
    for i in picks:
        sample = coeffs.at(int(i))
        kraus, choi = kraus_set(sample), choi_state(sample)
        worst_completeness = max(worst_completeness,
                                 float(np.abs(kraus.completeness() - identity).max()),
                                 float(np.abs(kraus.unitality() - identity).max()))
        min_choi = min(min_choi, float(choi.eigenvalues.min()))
        for rho in tomography_inputs():
            exact = evolve_with(sample, rho).matrix
            worst_action = max(worst_action,
                               float(np.abs(exact - apply_kraus(kraus, rho).matrix).max()),
                               float(np.abs(exact - choi_to_map(choi, rho).matrix).max()))
    return _result(worst_action < 1e-12 and worst_completeness < 1e-12 and min_choi >= -1e-12,
                   max_action_error=worst_action, max_completeness_error=worst_completeness,
                   min_choi_eigenvalue=min_choi)


def generator_suite(params: BathParams, times: np.ndarray, rng: np.random.Generator) -> Dict[str, Any]:
    """L F = dF/dt against central differences, and the three forms of the master equation"""
    usable = _well_conditioned(params, times[1:])
    if not len(usable):
        return _result(False, reason="no well-conditioned samples")
    picks = rng.choice(usable, size=min(20, len(usable)), replace=False)
    h = 1e-5
    worst_fd = worst_forms = 0.0
    for t in picks:
        t = float(t)
        coeffs = map_coefficients(params, t)
        L = generator_from(coeffs, params.eps_degeneracy)
        fd = (f_matrix_from(map_coefficients(params, t + h)) - f_matrix_from(map_coefficients(params, t - h))) / (2 * h)
        worst_fd = max(worst_fd, float(np.abs(L.entries @ f_matrix_from(coeffs) - fd).max()))

        rates = rate_trace(params, [t]).at(0)
        rho = random_density_matrix(rng).matrix
        canonical = master_equation_rhs(rates, rho, "canonical")
        worst_forms = max(worst_forms,
                          float(np.abs(canonical - master_equation_rhs(rates, rho, "hermitian")).max()),
                          float(np.abs(canonical - generator_action(L, rho)).max()))
    return _result(worst_fd < 1e-6 and worst_forms < 1e-10, max_fd_error=worst_fd, max_form_error=worst_forms)


def cp_suite(params: BathParams, times: np.ndarray, rng: np.random.Generator) -> Dict[str, Any]:
    grid = _invertible_prefix(params, times)
    report = cp_integral_check(params, grid)
    return _result(report.satisfied, min_dis=report.min_dis, min_deph=report.min_deph, horizon=float(grid[-1]))


def nonmarkov_suite(params: BathParams, times: np.ndarray, rng: np.random.Generator) -> Dict[str, Any]:
    """q >= 0 everywhere, and any positive p sits where q > 0"""
    rhp = rhp_from_rates(rate_trace(params, times))
    min_q = float(np.nanmin(rhp.q_total))
    orphans = 0
    for pair in default_pairs():
        blp = blp_trace(params, pair, times)
        rising = blp.defined & rhp.defined & (np.nan_to_num(blp.p) > 1e-9)
        orphans += int(np.count_nonzero(rising & ~(rhp.q_total > 0)))
    return _result(min_q >= 0.0 and orphans == 0, min_q=min_q, p_without_q=orphans)


def thermo_suite(params: BathParams, times: np.ndarray, rng: np.random.Generator) -> Dict[str, Any]:
    """Sign linkage from |1> and the spectral entropy rate against the closed form"""
    rates = rate_trace(params, times)
    trace = thermo_trace(params, DensityMatrix.named("1"), times)
    check = rates.defined & ~trace.pure & (np.abs(np.nan_to_num(rates.gamma_dis)) > SIGN_GUARD)
    negative_rate = rates.gamma_dis[check] < 0
    linkage_violations = int(np.count_nonzero(
        (negative_rate != (trace.sigma[check] < 0)) | (negative_rate != (trace.purity_rate[check] > 0))
    ))

    usable = _well_conditioned(params, times[1:])
    worst_spectral = worst_purity = 0.0
    for t in rng.choice(usable, size=min(20, len(usable)), replace=False) if len(usable) else []:
        t = float(t)
        rho0 = random_density_matrix(rng)
        rho = evolve_with(map_coefficients(params, t), rho0)
        if rho.bloch_norm > 1 - 1e-6:
            continue
        lind = LindbladSetHermitian.from_rates(rate_trace(params, [t]).at(0))
        closed = thermo_trace(params, rho0, [t])
        worst_spectral = max(worst_spectral, abs(entropy_rate_spectral(lind, rho) - float(closed.sigma[0])))
        worst_purity = max(worst_purity, abs(purity_rate(lind, rho) - float(closed.purity_rate[0])))
    return _result(linkage_violations == 0 and worst_spectral < 1e-6 and worst_purity < 1e-6,
                   sign_violations=linkage_violations, checked_samples=int(check.sum()),
                   max_spectral_error=worst_spectral, max_purity_error=worst_purity)


def ode_suite(params: BathParams, times: np.ndarray, rng: np.random.Generator) -> Dict[str, Any]:
    """RK4 on the master equation against the exact map for the tomography inputs"""
    grid = _invertible_prefix(params, time_grid(float(times[-1]), ODE_DT))
    inputs = tomography_inputs()
    bloch = MasterEquationIntegrator(params, settings.RK4_TOLERANCE).integrate(
        np.array([rho.bloch for rho in inputs]), grid)
    worst = max_purity = 0.0
    for k, rho0 in enumerate(inputs):
        ode = Trajectory(times=grid, bloch=bloch[:, k, :], method=TrajectoryMethod.ODE)
        worst = max(worst, float(ode.distance_to(exact_trajectory(params, rho0, grid)).max()))
        max_purity = max(max_purity, float(ode.purity.max()))
    return _result(worst < 1e-6 and max_purity <= 1 + 1e-9, max_trace_distance=worst, max_purity=max_purity,
                   horizon=float(grid[-1]))


SUITES: Dict[str, Suite] = {
    "unitality": unitality_suite,
    "oracle": oracle_suite,
    "channel": channel_suite,
    "generator": generator_suite,
    "cp_condition": cp_suite,
    "nonmarkov": nonmarkov_suite,
    "thermo": thermo_suite,
    "ode": ode_suite,
}


def run_verification(params: BathParams, t_max: float, dt: float, seed: int) -> Dict[str, Dict[str, Any]]:
    """Every suite on a seeded generator; a suite that raises is reported as failed"""
    times = time_grid(min(t_max, VERIFY_HORIZON), dt)
    report: Dict[str, Dict[str, Any]] = {}
    for name, suite in SUITES.items():
        rng = np.random.default_rng([seed, len(report)])
        try:
            report[name] = suite(params, times, rng)
        except SpinBathError as e:
            logger.error(f"Verification suite {name} raised: {e}")
            report[name] = _result(False, error=e.to_detail())
        status = "passed" if report[name]["passed"] else "FAILED"
        logger.info(f"Verification suite {name}: {status}")
    return report


def all_passed(report: Dict[str, Dict[str, Any]]) -> bool:
    return all(suite["passed"] for suite in report.values())
