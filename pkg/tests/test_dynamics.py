"""
Vector fields, the step-controlled integrator and trajectories
"""
import numpy as np
import pytest

from src.dynamics.integrator import FlowIntegrator, minimum_step
from src.dynamics.trajectory import PhasePoint, integrate, normalize_energy
from src.dynamics.vector_fields import PhaseFlow, energy_rate, gauged_vector_field, twisted_vector_field
from src.geometry.hamiltonian import gauge_map, hamiltonian_value, inverse_gauge_map
from src.lab import catalog
from src.lab.sampling import sample_initial_conditions
from src.utils.errors import IntegrationError, ZeroVelocity


def test_twist_turns_clockwise(constant_field):
    _, p_dot = twisted_vector_field(constant_field, np.zeros(2), np.array([1.0, 0.0]))
    assert np.array_equal(p_dot, np.array([0.0, -1.0]))


def test_fields_agree_for_constant_field(constant_field, rng):
    q = rng.uniform(0, 2 * np.pi, (5, 2))
    p = rng.normal(size=(5, 2))
    twisted = twisted_vector_field(constant_field, q, p)
    gauged = gauged_vector_field(constant_field, q, p)
    assert np.allclose(twisted[0], gauged[0])
    assert np.allclose(twisted[1], gauged[1])


@pytest.mark.parametrize("formulation", ["twisted", "gauged"])
def test_field_tangent_to_energy_levels(suite, rng, formulation):
    for model in suite.values():
        q = rng.uniform(0, 2 * np.pi, (200, model.dim))
        p = rng.normal(size=(200, model.dim))
        assert np.max(np.abs(energy_rate(model, q, p, formulation))) < 1e-12


def test_phase_flow_reversed(mixed):
    y = np.array([0.4, 1.0, 0.3, -0.7])
    assert np.array_equal(PhaseFlow(mixed, direction=-1)(0.0, y), -PhaseFlow(mixed)(0.0, y))
    with pytest.raises(ValueError):
        PhaseFlow(mixed, direction=0)


def test_phase_point_wraps():
    x = PhasePoint([2 * np.pi + 0.5, -0.5], [1.0, 0.0])
    assert np.allclose(x.q, [0.5, 2 * np.pi - 0.5])
    with pytest.raises(ValueError):
        x.q[0] = 1.0
    with pytest.raises(ValueError):
        PhasePoint([0.0, 0.0], [1.0])


def test_free_motion_is_a_line(flat_free, start):
    trajectory = integrate(flat_free, start, 5.0, 1e-12, t_eval=np.linspace(0, 5, 11))
    assert np.allclose(trajectory.q_lift[:, 0], trajectory.times, atol=1e-10)
    assert np.allclose(trajectory.q_lift[:, 1], 0.0, atol=1e-10)
    assert trajectory.max_energy_drift < 1e-14


def test_larmor_circle_closes(constant_field, start):
    trajectory = integrate(constant_field, start, 2 * np.pi, 1e-12, t_eval=np.array([np.pi, 2 * np.pi]))
    # clockwise circle of radius 1 starting along e_1 has its centre at (0, -1)
    assert np.allclose(trajectory.q_lift[0], [0.0, -2.0], atol=1e-8)
    assert np.allclose(trajectory.q_lift[-1], [0.0, 0.0], atol=1e-8)


@pytest.mark.parametrize("model_name", ["mixed", "conformal_n3"])
def test_energy_conserved(request, model_name):
    model = request.getfixturevalue(model_name)
    x0 = sample_initial_conditions(model, 1, 7).points()[0]
    trajectory = integrate(model, x0, 50.0, 1e-10)
    assert trajectory.energy[0] == pytest.approx(0.5, abs=1e-14)
    assert trajectory.max_energy_drift < 1e-9


def test_gauge_equivalence(flat_exact):
    x0 = sample_initial_conditions(flat_exact, 1, 3).points()[0]
    t_eval = np.linspace(0, 30, 61)
    gauged = integrate(flat_exact, x0, 30.0, 1e-12, t_eval=t_eval, formulation="gauged")
    twisted_start = PhasePoint(x0.q, inverse_gauge_map(flat_exact, x0.q, x0.p))
    twisted = integrate(flat_exact, twisted_start, 30.0, 1e-12, t_eval=t_eval, formulation="twisted")
    assert np.max(np.abs(gauged.q_lift - twisted.q_lift)) < 1e-8
    mapped = gauge_map(flat_exact, twisted.q, twisted.p)
    assert np.max(np.abs(mapped - gauged.p)) < 1e-8


def test_backward_flow_returns(mixed):
    x0 = sample_initial_conditions(mixed, 1, 11).points()[0]
    forward = integrate(mixed, x0, 10.0, 1e-12).final
    back = integrate(mixed, forward, 10.0, 1e-12, direction=-1).final
    assert np.allclose(np.angle(np.exp(1j * (back.q - x0.q))), 0.0, atol=1e-8)
    assert np.allclose(back.p, x0.p, atol=1e-8)


def test_midpoint_conserves_quadratic_energy(constant_field, start):
    trajectory = integrate(constant_field, start, 2 * np.pi, 1e-13, method="midpoint")
    assert trajectory.method == "midpoint"
    assert trajectory.max_energy_drift < 1e-10
    assert np.allclose(trajectory.q_lift[-1], [0.0, 0.0], atol=1e-3)


def test_trajectory_frame_columns(conformal_n3):
    x0 = sample_initial_conditions(conformal_n3, 1, 5).points()[0]
    frame = integrate(conformal_n3, x0, 1.0, t_eval=np.linspace(0, 1, 5)).to_frame()
    assert list(frame.columns) == ["t", "q1", "q2", "q3", "p1", "p2", "p3", "H"]
    assert len(frame) == 5
    assert frame[["q1", "q2", "q3"]].to_numpy().max() < 2 * np.pi


def test_normalize_energy(mixed):
    x = normalize_energy(mixed, ([0.3, 1.2], [3.0, -4.0]))
    assert hamiltonian_value(mixed, x.q, x.p) == pytest.approx(0.5, abs=1e-15)
    assert x.p[0] / x.p[1] == pytest.approx(-0.75)


def test_normalize_energy_gauged(conformal_n3):
    q = np.array([0.1, 0.2, 0.3])
    x = normalize_energy(conformal_n3, (q, conformal_n3.alpha(q) + np.array([0.0, 2.0, 0.0])))
    assert hamiltonian_value(conformal_n3, x.q, x.p, "H_tilde") == pytest.approx(0.5, abs=1e-15)


def test_zero_velocity(conformal_n3):
    q = np.array([0.1, 0.2, 0.3])
    with pytest.raises(ZeroVelocity):
        normalize_energy(conformal_n3, (q, conformal_n3.alpha(q)))


@pytest.mark.parametrize("T, tol", [(0.0, 1e-10), (-1.0, 1e-10), (1.0, 1e-3), (1.0, 1e-14)])
def test_integrate_arguments_validated(flat_free, start, T, tol):
    with pytest.raises(ValueError):
        integrate(flat_free, start, T, tol)


def test_unknown_method():
    with pytest.raises(ValueError):
        FlowIntegrator("Euler")


def test_minimum_step_scales_with_span():
    assert minimum_step(0.5) == pytest.approx(1e-12)
    assert minimum_step(100.0) == pytest.approx(1e-10)


def test_finite_time_blowup_stops_integration():
    # y' = y^2 from y(0) = 1 leaves every bound at t = 1
    with pytest.raises(IntegrationError):
        FlowIntegrator("DOP853", 1e-10).solve(lambda t, y: y ** 2, (0.0, 2.0), np.array([1.0]))


def test_monitor_stops_run():
    result = FlowIntegrator("RK45", 1e-8).solve(
        lambda t, y: np.cos(t) * np.ones(1), (0.0, 10.0), np.zeros(1),
        monitor=lambda t, y, step: t > 3.0,
    )
    assert result.stopped
    assert 3.0 < result.stopped_at < 4.0
    assert result.t[-1] == result.stopped_at


def test_dense_output_outside_range():
    result = FlowIntegrator().solve(lambda t, y: -y, (0.0, 1.0), np.ones(2), dense=True)
    assert np.allclose(result.dense(0.5), np.exp(-0.5), atol=1e-9)
    assert result.dense(np.array([0.2, 0.4])).shape == (2, 2)
    with pytest.raises(ValueError):
        result.dense(1.5)
