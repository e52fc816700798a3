import math

import numpy as np
import pytest
from scipy.special import comb

from app.core.exceptions import InvalidParameters
from app.models.bath import BathParams, MapCoefficients
from app.services.spin_bath import (
    coefficient_trace, degeneracy_weight, log_degeneracy, map_coefficients, subspace_terms, time_grid,
)


def test_degeneracy_matches_binomial_difference():
    for n, j in [(4, 0.0), (4, 1.0), (4, 2.0), (5, 0.5), (5, 2.5), (12, 3.0)]:
        k = int(n / 2 + j)
        expected = comb(n, k, exact=True) - comb(n, k + 1, exact=True)
        assert math.exp(log_degeneracy(n, j)) == pytest.approx(expected, rel=1e-12)


def test_degeneracy_stays_finite_for_large_baths():
    assert math.isfinite(log_degeneracy(2000, 10.0))
    assert 0.0 < degeneracy_weight(2000, 10.0) < 1.0


@pytest.mark.parametrize("n", [1, 2, 5, 20, 51])
def test_subspace_weights_sum_to_one(n):
    terms = subspace_terms(BathParams(N=n, alpha=0.03))
    assert sum(t.weight for t in terms) == pytest.approx(1.0, abs=1e-12)
    assert len(terms) == sum(int(2 * j + 1) for j in np.arange(0.5 * (n % 2), n / 2 + 0.5))


def test_subspace_order_and_ladder_factors():
    terms = subspace_terms(BathParams(N=2, alpha=0.1))
    assert [(t.j, t.m) for t in terms] == [(0.0, 0.0), (1.0, -1.0), (1.0, 0.0), (1.0, 1.0)]
    top = terms[-1]
    assert top.b_plus == 0.0
    assert top.b_minus == pytest.approx(math.sqrt(2.0))


def test_single_spin_bath_has_two_equal_terms():
    terms = subspace_terms(BathParams(N=1, alpha=0.1))
    assert [t.weight for t in terms] == pytest.approx([0.5, 0.5])


def test_identity_at_time_zero(fig_params):
    coeffs = map_coefficients(fig_params, 0.0)
    assert (coeffs.A, coeffs.B, coeffs.C) == (pytest.approx(1.0), pytest.approx(0.0), pytest.approx(1.0))
    assert coeffs.dA == pytest.approx(0.0, abs=1e-15)
    assert abs(coeffs.dC) == pytest.approx(0.0, abs=1e-12)


def test_uncoupled_bath_leaves_the_spin_alone():
    coeffs = coefficient_trace(BathParams(N=7, alpha=0.0), time_grid(50.0, 0.1))
    np.testing.assert_allclose(coeffs.A, 1.0, atol=1e-12)
    np.testing.assert_allclose(coeffs.B, 0.0, atol=1e-12)
    np.testing.assert_allclose(coeffs.C, 1.0, atol=1e-12)
    np.testing.assert_allclose(coeffs.dC, 0.0, atol=1e-12)


@pytest.mark.parametrize("n", [5, 10, 20])
@pytest.mark.parametrize("alpha", [0.01, 0.03, 0.1])
def test_unitality_over_long_grid(n, alpha):
    coeffs = coefficient_trace(BathParams(N=n, alpha=alpha), time_grid(200.0, 0.01))
    assert np.max(np.abs(coeffs.A + coeffs.B - 1.0)) < 1e-12
    assert np.max(np.abs(coeffs.dA + coeffs.dB)) < 1e-12
    assert coeffs.B.min() >= -1e-14
    assert np.all(coeffs.A >= coeffs.abs_C - 1e-12)


def test_sampled_coefficients_report_no_violations(fig_params, rng):
    for t in rng.uniform(0.0, 200.0, size=50):
        assert map_coefficients(fig_params, float(t)).violations() == []
    broken = MapCoefficients(t=1.0, A=0.2, B=0.9, C_re=0.5, C_im=0.0, dA=0.1, dB=0.1, dC_re=0.0, dC_im=0.0)
    assert broken.violations() == ["unitality", "choi_positivity", "unitality_rate"]


def test_derivatives_match_finite_differences(fig_params):
    h = 1e-5
    for t in [0.7, 3.0, 12.5, 40.0]:
        mid = map_coefficients(fig_params, t)
        ahead, behind = map_coefficients(fig_params, t + h), map_coefficients(fig_params, t - h)
        assert mid.dB == pytest.approx((ahead.B - behind.B) / (2 * h), abs=1e-8)
        assert mid.dC == pytest.approx((ahead.C - behind.C) / (2 * h), abs=1e-8)


def test_scalar_and_vector_paths_agree(fig_params):
    times = np.array([0.0, 1.3, 17.0, 123.4])
    trace = coefficient_trace(fig_params, times)
    for i, t in enumerate(times):
        single = map_coefficients(fig_params, float(t))
        for field in ("A", "B", "C_re", "C_im", "dB", "dC_re", "dC_im"):
            assert getattr(trace.at(i), field) == pytest.approx(getattr(single, field), abs=1e-14)


def test_degenerate_rabi_frequency_uses_limit():
    # omega0 = alpha/2 puts Omega_- = 0 and b_- = 0 on the j = 0 block
    params = BathParams(N=2, alpha=1.0, omega0=0.5)
    terms = subspace_terms(params)
    assert min(t.mu_minus for t in terms) == 0.0
    coeffs = coefficient_trace(params, time_grid(10.0, 0.5))
    assert np.all(np.isfinite(coeffs.A)) and np.all(np.isfinite(coeffs.C))
    np.testing.assert_allclose(coeffs.A + coeffs.B, 1.0, atol=1e-12)


def test_invalid_inputs_are_rejected(fig_params):
    with pytest.raises(InvalidParameters):
        map_coefficients(fig_params, float("nan"))
    with pytest.raises(InvalidParameters):
        coefficient_trace(fig_params, [-1.0])
    with pytest.raises(InvalidParameters):
        BathParams.build(N=0, alpha=0.1)
    with pytest.raises(InvalidParameters):
        BathParams.build(N=3, alpha=float("inf"))
    with pytest.raises(InvalidParameters):
        time_grid(10.0, 0.0)


def test_time_grid_covers_the_interval():
    grid = time_grid(200.0, 0.01)
    assert len(grid) == 20001
    assert grid[0] == 0.0 and grid[-1] == 200.0
