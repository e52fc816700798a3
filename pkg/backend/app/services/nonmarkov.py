import math
import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from app.core.config import settings
from app.core.exceptions import InvalidParameters, UndefinedFractionExceeded
from app.models.bath import BathParams, MapCoefficients, CoefficientTrace
from app.models.channel import DensityMatrix, trace_distance as state_trace_distance
from app.models.generator import RateSet, RateTrace
from app.models.nonmarkov import RhpSample, RhpSummary, RhpTrace, StatePair, BlpTrace
from app.services.channel import evolve_with, pauli_transfer_to_choi
from app.services.generator import f_matrix, rate_trace
from app.services.spin_bath import coefficient_trace, time_grid

logger = logging.getLogger(__name__)


def _violation(rate):
    """|Gamma| - Gamma, i.e. 2 max(0, -Gamma)"""
    return np.abs(rate) - rate


def rhp_q(rates: Optional[RateSet]) -> Optional[RhpSample]:
    """Instantaneous divisibility violation; None for an undefined sample"""
    if rates is None or not (math.isfinite(rates.gamma_dis) and math.isfinite(rates.gamma_deph)):
        return None
    q_dis = float(_violation(rates.gamma_dis))
    q_deph = float(_violation(rates.gamma_deph))
    return RhpSample(t=rates.t, q_dis=q_dis, q_deph=q_deph, q_total=q_dis + q_deph)


def rhp_from_rates(rates: RateTrace) -> RhpTrace:
    q_dis = _violation(rates.gamma_dis)
    q_deph = _violation(rates.gamma_deph)
    return RhpTrace(
        times=rates.times, q_dis=q_dis, q_deph=q_deph,
        q_total=q_dis + q_deph, defined=rates.defined,
    )


def rhp_trace(params: BathParams, times) -> RhpTrace:
    return rhp_from_rates(rate_trace(params, times))


def summarize_rhp(trace: RhpTrace, limit: Optional[float] = None) -> RhpSummary:
    """eta by trapezoidal quadrature over defined samples, G = eta/(eta+1)"""
    limit = settings.UNDEFINED_FRACTION_LIMIT if limit is None else limit
    defined = trace.defined
    undefined_fraction = float(1.0 - np.mean(defined))
    if undefined_fraction > limit:
        raise UndefinedFractionExceeded(undefined_fraction, limit)
    if undefined_fraction:
        logger.warning(f"RHP integral skips {undefined_fraction:.2%} undefined samples")
    eta = float(trapezoid(trace.q_total[defined], trace.times[defined])) if defined.sum() > 1 else 0.0
    return RhpSummary(
        eta=eta, g_measure=eta / (eta + 1.0),
        horizon=float(trace.times[-1]), undefined_fraction=undefined_fraction,
    )


def rhp_measure(params: BathParams, horizon: float, dt: float) -> RhpSummary:
    return summarize_rhp(rhp_trace(params, time_grid(horizon, dt)))


def rhp_q_norm(params: BathParams, t: float, eps: Optional[float] = None) -> float:
    """Trace-norm growth of the Choi state of the intermediate map over [t, t+eps].

    The intermediate map is F(t+eps) F(t)^-1; for small eps this approximates
    q(t) to first order in eps.
    """
    eps = settings.NORM_EPSILON if eps is None else eps
    if eps <= 0:
        raise InvalidParameters("eps must be positive")
    step = f_matrix(params, t + eps) @ np.linalg.inv(f_matrix(params, t))
    choi = pauli_transfer_to_choi(step)
    norm = float(np.abs(np.linalg.eigvalsh(choi)).sum())
    return (norm - 1.0) / eps


def trace_distance(coeffs: MapCoefficients, pair: StatePair) -> float:
    """sqrt(a^2 (A-B)^2 + |b|^2 |C|^2)"""
    return math.sqrt(pair.a ** 2 * coeffs.contraction ** 2 + abs(pair.b) ** 2 * coeffs.abs_C ** 2)


def trace_distance_direct(coeffs: MapCoefficients, pair: StatePair) -> float:
    """1/2 ||Phi[rho1] - Phi[rho2]||_1 by eigensolve"""
    return state_trace_distance(evolve_with(coeffs, pair.rho1), evolve_with(coeffs, pair.rho2))


def _distance_and_rate(coeffs: CoefficientTrace, pair: StatePair, eps: float):
    a2, b2 = pair.a ** 2, abs(pair.b) ** 2
    contraction = coeffs.contraction
    distance = np.sqrt(a2 * contraction ** 2 + b2 * coeffs.abs_C ** 2)
    defined = distance > eps
    with np.errstate(divide="ignore", invalid="ignore"):
        numerator = a2 * contraction * coeffs.d_contraction + b2 * coeffs.d_abs_C_times_abs_C
        p = np.where(defined, numerator / distance, np.nan)
    return distance, p, defined


def blp_p(params: BathParams, pair: StatePair, t: float) -> Optional[float]:
    """dD/dt, analytic; None where D vanishes"""
    coeffs = coefficient_trace(params, [t])
    _, p, defined = _distance_and_rate(coeffs, pair, params.eps_degeneracy)
    return float(p[0]) if defined[0] else None


def blp_trace(params: BathParams, pair: StatePair, times) -> BlpTrace:
    coeffs = coefficient_trace(params, times)
    distance, p, defined = _distance_and_rate(coeffs, pair, params.eps_degeneracy)
    return BlpTrace(times=coeffs.times, distance=distance, p=p, defined=defined)


def positive_increase(distance: np.ndarray) -> float:
    """Integral of max(0, p) over the grid as the sum of positive increments of D.

    Exact on every monotone stretch; only grid cells containing a turning
    point carry discretisation error.
    """
    steps = np.diff(distance)
    return float(steps[steps > 0].sum())


def default_pairs() -> List[StatePair]:
    named = DensityMatrix.named
    return [
        StatePair.of(named("+"), named("-"), label="pm"),
        StatePair.of(named("0"), named("1"), label="zo"),
        StatePair.of(named("+i"), named("-i"), label="pmi"),
    ]


def bloch_grid_pairs(n_polar: int = 7, n_azimuth: int = 4) -> List[StatePair]:
    """Antipodal pure-state pairs on a polar x azimuth grid of the Bloch sphere"""
    pairs = []
    for theta in np.linspace(0.0, np.pi / 2, n_polar):
        azimuths = [0.0] if theta == 0.0 else np.linspace(0.0, np.pi, n_azimuth, endpoint=False)
        for phi in azimuths:
            n = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
            pairs.append(StatePair.of(
                DensityMatrix.from_bloch(*n), DensityMatrix.from_bloch(*(-n)),
                label=f"grid({theta:.4f},{phi:.4f})",
            ))
    return pairs


def blp_pair_values(params: BathParams, pairs: Sequence[StatePair], horizon: float, dt: float) -> List[float]:
    times = time_grid(horizon, dt)
    coeffs = coefficient_trace(params, times)
    values = []
    for pair in pairs:
        distance, _, _ = _distance_and_rate(coeffs, pair, params.eps_degeneracy)
        values.append(positive_increase(distance))
    return values


def blp_lower_bound(params: BathParams, pairs: Sequence[StatePair], horizon: float, dt: float) -> float:
    """Max over the supplied pairs of the integrated positive p(t)"""
    if not pairs:
        raise InvalidParameters("At least one state pair is required")
    return max(blp_pair_values(params, pairs, horizon, dt))
