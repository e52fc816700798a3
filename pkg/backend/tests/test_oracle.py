import numpy as np
import pytest

from app.core.config import settings
from app.core.exceptions import DimensionCap, InvalidParameters, SingularMap, StepFailure
from app.models.bath import BathParams
from app.models.channel import DensityMatrix, random_density_matrix, tomography_inputs
from app.models.oracle import FullStateLayout, Trajectory, TrajectoryMethod
from app.services.channel import evolve_state
from app.services.generator import rate_trace
from app.services.oracle import (
    BruteForceOracle, MasterEquationIntegrator, brute_force_map, brute_force_state, channel_discrepancy,
    exact_trajectory, get_oracle, integrate_master_equation, total_jz_expectation,
)
from app.services.spin_bath import map_coefficients, time_grid

FIELDS = ("A", "B", "C_re", "C_im", "dA", "dB", "dC_re", "dC_im")


def _assert_same_coefficients(params: BathParams, t: float, tol: float = 1e-10):
    exact, brute = map_coefficients(params, t), brute_force_map(params, t)
    for field in FIELDS:
        assert getattr(brute, field) == pytest.approx(getattr(exact, field), abs=tol), field


def test_single_bath_spin_matches_closed_form():
    _assert_same_coefficients(BathParams(N=1, alpha=0.1), 3.0)


@pytest.mark.parametrize("n", [1, 2, 4, 6, 8])
@pytest.mark.parametrize("alpha", [0.05, 0.1])
def test_small_baths_match_closed_form(n, alpha, rng):
    params = BathParams(N=n, alpha=alpha)
    for t in rng.uniform(0.0, 50.0, size=50):
        _assert_same_coefficients(params, float(t))


def test_reference_bath_matches_closed_form():
    _assert_same_coefficients(BathParams(N=6, alpha=0.1, omega0=1.0), 5.0)


def test_odd_frequency_matches_closed_form():
    _assert_same_coefficients(BathParams(N=3, alpha=0.25, omega0=0.7), 11.0)


def test_reduced_states_match_the_map(small_params, rng):
    for t in [0.0, 2.5, 40.0]:
        rho0 = random_density_matrix(rng)
        brute = brute_force_state(small_params, rho0, t)
        exact = evolve_state(small_params, rho0, t)
        np.testing.assert_allclose(brute.matrix, exact.matrix, atol=1e-10)


def test_lab_frame_state_carries_the_free_phase(small_params):
    t = 1.7
    rotating = brute_force_state(small_params, DensityMatrix.named("+"), t)
    lab = brute_force_state(small_params, DensityMatrix.named("+"), t, co_rotating=False)
    assert lab.rho12 == pytest.approx(rotating.rho12 * np.exp(-1j * small_params.omega0 * t), abs=1e-12)


def test_full_evolution_conserves_trace_and_total_jz(small_params):
    oracle = get_oracle(small_params)
    rho0 = DensityMatrix.named("0")
    start = total_jz_expectation(small_params, rho0, 0.0)
    assert start == pytest.approx(0.5)
    for t in [0.3, 7.0, 55.0]:
        assert np.trace(oracle.full_state(rho0, t)).real == pytest.approx(1.0, abs=1e-10)
        assert total_jz_expectation(small_params, rho0, t) == pytest.approx(start, abs=1e-10)


def test_oracle_refuses_large_baths():
    with pytest.raises(DimensionCap):
        BruteForceOracle(BathParams(N=11, alpha=0.1))
    with pytest.raises(DimensionCap) as err:
        brute_force_map(BathParams(N=3, alpha=0.1), 1.0, cap=2)
    assert (err.value.n, err.value.cap) == (3, 2)
    assert FullStateLayout(N=3).dimension == 16


def test_trajectory_validation():
    with pytest.raises(InvalidParameters):
        Trajectory.build(times=np.array([0.0, 0.0]), bloch=np.zeros((2, 3)), method=TrajectoryMethod.ODE)
    with pytest.raises(InvalidParameters):
        Trajectory.build(times=np.array([0.0, 1.0]), bloch=np.zeros((3, 3)), method=TrajectoryMethod.ODE)


def test_maximally_mixed_state_stays_put(fig_params):
    trajectory = integrate_master_equation(fig_params, DensityMatrix.named("mixed"), time_grid(20.0, 0.5))
    np.testing.assert_allclose(trajectory.bloch, 0.0, atol=1e-15)


def test_uncoupled_bath_keeps_the_state():
    rho0 = DensityMatrix.from_bloch(0.3, 0.1, -0.6)
    trajectory = integrate_master_equation(BathParams(N=8, alpha=0.0), rho0, time_grid(30.0, 0.5))
    np.testing.assert_allclose(trajectory.bloch, np.tile(rho0.bloch, (len(trajectory.times), 1)), atol=1e-12)


def test_master_equation_reproduces_the_map(fig_params):
    times = time_grid(100.0, 0.01)
    inputs = tomography_inputs()
    bloch = MasterEquationIntegrator(fig_params, settings.RK4_TOLERANCE).integrate(
        np.array([rho.bloch for rho in inputs]), times)
    for k, rho0 in enumerate(inputs):
        ode = Trajectory(times=times, bloch=bloch[:, k, :], method=TrajectoryMethod.ODE)
        assert ode.distance_to(exact_trajectory(fig_params, rho0, times)).max() < 1e-6
        assert ode.purity.max() <= 1.0 + 1e-9
        endpoint = evolve_state(fig_params, rho0, 100.0)
        assert 0.5 * np.linalg.norm(np.subtract(ode.bloch[-1], endpoint.bloch)) < 1e-6


def test_single_state_integration(fig_params):
    rho0 = DensityMatrix.named("+")
    times = time_grid(20.0, 0.05)
    ode = integrate_master_equation(fig_params, rho0, times)
    assert ode.method == TrajectoryMethod.ODE
    assert ode.distance_to(exact_trajectory(fig_params, rho0, times)).max() < 1e-6


def test_fixed_step_rk4_is_fourth_order(fig_params):
    rho0 = DensityMatrix.from_bloch(0.6, 0.2, 0.7)
    coarse = time_grid(20.0, 0.1)
    exact = exact_trajectory(fig_params, rho0, coarse)
    errors = []
    for refine in (1, 2, 4):
        fine = time_grid(20.0, 0.1 / refine)
        ode = integrate_master_equation(fig_params, rho0, fine, tolerance=None)
        errors.append(float(np.max(np.linalg.norm(ode.bloch[::refine] - exact.bloch, axis=1))))
    assert errors[0] > errors[1] > errors[2] > 0
    for big, small in zip(errors, errors[1:]):
        assert 12.0 <= big / small <= 20.0


def test_coarse_steps_are_halved(fig_params):
    rho0 = DensityMatrix.named("+")
    times = time_grid(20.0, 2.0)
    integrator = MasterEquationIntegrator(fig_params, tolerance=1e-9)
    depths = []
    step = integrator._controlled_step

    def counting_step(r, t0, t1, depth=0):
        depths.append(depth)
        return step(r, t0, t1, depth)

    integrator._controlled_step = counting_step
    bloch = integrator.integrate(np.array(rho0.bloch), times)[:, 0, :]
    assert max(depths) >= 1
    assert len(depths) > len(times) - 1
    exact = exact_trajectory(fig_params, rho0, times)
    assert np.max(0.5 * np.linalg.norm(bloch - exact.bloch, axis=1)) < 1e-6


def test_step_control_gives_up_without_halvings(fig_params):
    with pytest.raises(StepFailure) as err:
        integrate_master_equation(fig_params, DensityMatrix.named("+"), time_grid(10.0, 1.0),
                                  tolerance=1e-300, max_halvings=0)
    assert err.value.t == 0.0
    assert err.value.error > 1e-300


def test_integrator_refuses_singular_rates(fig_params, monkeypatch):
    times = np.array([0.0, 0.5, 1.0])
    rates = rate_trace(fig_params, times)
    singular = rates.model_copy(update={"defined": np.array([True, False, True])})
    monkeypatch.setattr("app.services.oracle.rate_trace", lambda params, t: singular)
    with pytest.raises(SingularMap):
        MasterEquationIntegrator(fig_params)._rhs_at(times)
    with pytest.raises(SingularMap):
        integrate_master_equation(fig_params, DensityMatrix.named("+"), time_grid(2.0, 1.0))


def test_uncoupled_channels_agree_exactly():
    report = channel_discrepancy(BathParams(N=3, alpha=0.0), time_grid(10.0, 0.5))
    assert report.max_discrepancy == pytest.approx(0.0, abs=1e-12)
    assert report.errors == {}


def test_four_way_consistency():
    params = BathParams(N=6, alpha=0.1)
    report = channel_discrepancy(params, time_grid(50.0, 0.25))
    assert report.methods == ["exact-map", "kraus", "ode", "brute-force"]
    assert len(report.pairwise) == 6
    assert report.errors == {}
    assert report.max_discrepancy < 1e-6
    assert report.per_method["exact-map"] == 0.0


def test_large_bath_skips_brute_force(fig_params):
    report = channel_discrepancy(fig_params, time_grid(100.0, 0.5))
    assert report.methods == ["exact-map", "kraus", "ode"]
    assert report.max_discrepancy < 1e-6
