import math
import logging
from functools import lru_cache
from typing import List

import numpy as np
from scipy.special import gammaln

from app.core.exceptions import InvalidParameters
from app.models.bath import BathParams, SubspaceTerm, MapCoefficients, CoefficientTrace

logger = logging.getLogger(__name__)

# Upper bound on time-samples x subspace-terms held in memory at once
_CHUNK_ELEMENTS = 2_000_000


def log_binomial(n: int, k: float) -> float:
    """log C(n, k), with C(n, k) = 0 (log -inf) outside 0 <= k <= n"""
    if k < 0 or k > n:
        return -math.inf
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def log_degeneracy(n_bath: int, j: float) -> float:
    """log N_j, N_j = C(N, N/2+j) - C(N, N/2+j+1), the multiplicity of spin j.

    Uses C(N, k+1) = C(N, k)(N-k)/(k+1), so N_j = C(N, k)(2j+1)/(k+1) with
    k = N/2 + j, avoiding the cancellation of two large binomials.
    """
    k = n_bath / 2 + j
    return log_binomial(n_bath, k) + math.log(2 * j + 1) - math.log(k + 1)


def degeneracy_weight(n_bath: int, j: float) -> float:
    """N_j / 2^N per (j, m) state"""
    return math.exp(log_degeneracy(n_bath, j) - n_bath * math.log(2.0))


def check_times(times: np.ndarray) -> np.ndarray:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if not np.all(np.isfinite(times)):
        raise InvalidParameters("Times must be finite")
    if np.any(times < 0):
        raise InvalidParameters("Times must be non-negative")
    return times


def time_grid(t_max: float, dt: float) -> np.ndarray:
    """Uniform grid on [0, t_max] with step as close to dt as fits exactly"""
    if not (math.isfinite(t_max) and math.isfinite(dt)) or dt <= 0 or t_max <= 0:
        raise InvalidParameters(f"Need t_max > 0 and dt > 0, got t_max={t_max}, dt={dt}")
    n_steps = max(1, int(round(t_max / dt)))
    return np.linspace(0.0, t_max, n_steps + 1)


class SpinBathModel:
    """Exact reduced dynamics of a central spin in an unpolarized spin bath.

    Holds the (j, m) subspace grid of the bath as flat arrays and evaluates the
    map coefficients as weighted sums over it.
    """

    def __init__(self, params: BathParams):
        self.params = params
        n = params.N
        j_min = 0.5 * (n % 2)
        j_values = j_min + np.arange(int(round(n / 2 - j_min)) + 1)

        j_list, m_list, w_list = [], [], []
        for j in j_values:
            m = -j + np.arange(int(round(2 * j)) + 1)
            j_list.append(np.full(m.shape, j))
            m_list.append(m)
            w_list.append(np.full(m.shape, degeneracy_weight(n, j)))

        self.j = np.concatenate(j_list)
        self.m = np.concatenate(m_list)
        self.weight = np.concatenate(w_list)

        alpha, omega0 = params.alpha, params.omega0
        self.omega_plus = omega0 + alpha * (self.m + 0.5)
        self.omega_minus = -omega0 + alpha * (-self.m + 0.5)
        jj = self.j * (self.j + 1)
        self.b_plus = np.sqrt(np.clip(jj - self.m * (self.m + 1), 0.0, None))
        self.b_minus = np.sqrt(np.clip(jj - self.m * (self.m - 1), 0.0, None))
        self.mu_plus = 0.5 * np.sqrt(self.omega_plus ** 2 + alpha ** 2 * self.b_plus ** 2)
        self.mu_minus = 0.5 * np.sqrt(self.omega_minus ** 2 + alpha ** 2 * self.b_minus ** 2)

        logger.info(f"Spin bath N={n}, alpha={alpha}: {len(self.m)} subspace terms")

    def __len__(self) -> int:
        return len(self.m)

    def terms(self) -> List[SubspaceTerm]:
        return [
            SubspaceTerm(
                j=float(self.j[k]), m=float(self.m[k]), weight=float(self.weight[k]),
                omega_plus=float(self.omega_plus[k]), omega_minus=float(self.omega_minus[k]),
                mu_plus=float(self.mu_plus[k]), mu_minus=float(self.mu_minus[k]),
                b_plus=float(self.b_plus[k]), b_minus=float(self.b_minus[k]),
            )
            for k in range(len(self.m))
        ]

    def _sinc_terms(self, t: np.ndarray, mu: np.ndarray):
        """cos(mu t) and sin(mu t)/mu, the latter -> t where mu < eps"""
        mt = t[:, None] * mu[None, :]
        cos = np.cos(mt)
        small = mu < self.params.eps_degeneracy
        safe_mu = np.where(small, 1.0, mu)
        sin_over_mu = np.where(small[None, :], t[:, None], np.sin(mt) / safe_mu[None, :])
        return cos, sin_over_mu

    def _evaluate(self, t: np.ndarray):
        alpha2 = self.params.alpha ** 2
        w = self.weight

        c_p, s_p = self._sinc_terms(t, self.mu_plus)
        c_m, s_m = self._sinc_terms(t, self.mu_minus)

        flip = alpha2 * self.b_plus ** 2
        A = (c_p ** 2 + (self.omega_plus ** 2 / 4) * s_p ** 2) @ w
        B = (flip / 4 * s_p ** 2) @ w
        dB = (flip / 2 * s_p * c_p) @ w
        dA = -dB

        # |+,m> survival amplitude and conjugated |-,m> survival amplitude
        f_p = c_p - 0.5j * self.omega_plus * s_p
        g_m = c_m + 0.5j * self.omega_minus * s_m
        df_p = -(self.mu_plus ** 2) * s_p - 0.5j * self.omega_plus * c_p
        dg_m = -(self.mu_minus ** 2) * s_m + 0.5j * self.omega_minus * c_m

        S = (f_p * g_m) @ w
        dS = (df_p * g_m + f_p * dg_m) @ w

        phase = np.exp(1j * self.params.omega0 * t)
        C = phase * S
        dC = 1j * self.params.omega0 * C + phase * dS
        return A, B, C, dA, dB, dC

    def trace(self, times) -> CoefficientTrace:
        """Coefficients and derivatives over a grid of times"""
        times = check_times(times)
        chunk = max(1, _CHUNK_ELEMENTS // max(1, len(self)))
        parts = [self._evaluate(times[i:i + chunk]) for i in range(0, len(times), chunk)]
        A, B, C, dA, dB, dC = (np.concatenate(cols) for cols in zip(*parts))
        return CoefficientTrace(times=times, A=A, B=B, C=C, dA=dA, dB=dB, dC=dC)

    def coefficients(self, t: float) -> MapCoefficients:
        return self.trace(np.array([t])).at(0)


@lru_cache(maxsize=64)
def get_model(params: BathParams) -> SpinBathModel:
    return SpinBathModel(params)


def subspace_terms(params: BathParams) -> List[SubspaceTerm]:
    """One term per (j, m), j ascending from j_min, m from -j to j"""
    return get_model(params).terms()


def map_coefficients(params: BathParams, t: float) -> MapCoefficients:
    """A(t), B(t), C(t) with analytic derivatives"""
    if not math.isfinite(t):
        raise InvalidParameters(f"Time must be finite, got {t}")
    return get_model(params).coefficients(t)


def coefficient_trace(params: BathParams, times) -> CoefficientTrace:
    return get_model(params).trace(times)
