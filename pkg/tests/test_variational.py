"""
Linearized flow, tangent frames, conjugate-point detection, Riccati equation and the stable-field limit
"""
from dataclasses import replace

import numpy as np
import pytest

from src.config.settings import settings
from src.dynamics.vector_fields import gauged_vector_field
from src.geometry.hamiltonian import hamiltonian_blocks, trace_integrand
from src.lab import catalog
from src.lab.sampling import sample_initial_conditions
from src.utils.errors import DetectorAmbiguous, InvalidInitial, NoConjugatePoint
from src.variational.conjugate import (
    AMBIGUOUS,
    ConjugateDetector,
    FOUND,
    NONE,
    first_conjugate_time,
    sample_times,
    scan_conjugate_time,
)
from src.variational.frames import finite_difference_frame, orthonormal_sigma_min, propagate_vertical
from src.variational.green import green_limit
from src.variational.linearized import flow_jacobian, jacobian_difference_error, linearized_field
from src.variational.riccati import (
    RiccatiHistory,
    completed_square_defect,
    equality_matrix,
    lagrangian_residual,
    project_lagrangian,
    propagate_riccati,
    riccati_from_frame,
    trace_derivative,
    trace_inequality_check,
    vertical_limit,
)


# linearized flow

def test_flow_jacobian_matches_differences(suite, rng):
    model = suite["suite-n2"]
    q = rng.uniform(0, 2 * np.pi, 2)
    p = rng.normal(size=2)
    h = 1e-6

    def field(x):
        return np.concatenate(gauged_vector_field(model, x[:2], x[2:]))

    x = np.concatenate([q, p])
    numeric = np.column_stack([(field(x + h * e) - field(x - h * e)) / (2 * h) for e in np.eye(4)])
    assert np.allclose(flow_jacobian(model, q, p), numeric, atol=1e-7)


def test_linearized_field_columns(conformal_n3, rng):
    q = rng.uniform(0, 2 * np.pi, 3)
    p = rng.normal(size=3)
    dq, dp = rng.normal(size=(3, 2)), rng.normal(size=(3, 2))
    dq_dot, dp_dot = linearized_field(conformal_n3, q, p, dq, dp)
    first = linearized_field(conformal_n3, q, p, dq[:, 0], dp[:, 0])
    assert np.allclose(dq_dot[:, 0], first[0])
    assert np.allclose(dp_dot[:, 0], first[1])


@pytest.mark.parametrize("name", ["mixed", "flat-exact", "conformal-n3", "suite-n2", "suite-n3"])
def test_flow_jacobian_over_many_states(name, suite, mixed, flat_exact, conformal_n3, rng):
    model = {"mixed": mixed, "flat-exact": flat_exact, "conformal-n3": conformal_n3, **suite}[name]
    worst = 0.0
    for _ in range(100):
        q = rng.uniform(0, 2 * np.pi, model.dim)
        p = rng.normal(size=model.dim)
        worst = max(worst, jacobian_difference_error(model, q, p))
    assert worst < 1e-6


@pytest.mark.parametrize("which", ["mixed", "conformal-n3"])
def test_vertical_frame_matches_perturbed_flow(which, mixed, conformal_n3):
    model = mixed if which == "mixed" else conformal_n3
    x0 = sample_initial_conditions(model, 1, 7).points()[0]
    frame = propagate_vertical(model, x0, 2.0, 1e-13, t_eval=np.array([2.0]))
    J, P = finite_difference_frame(model, x0, 2.0, 1e-6, 1e-13)
    assert np.allclose(frame.J[-1], J, atol=1e-5)
    assert np.allclose(frame.P[-1], P, atol=1e-5)


# frames

def test_sigma_min_is_scale_free(rng):
    J, P = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
    assert orthonormal_sigma_min(7.0 * J, 7.0 * P) == pytest.approx(orthonormal_sigma_min(J, P))
    assert orthonormal_sigma_min(np.zeros((3, 3)), np.eye(3)) == pytest.approx(0.0, abs=1e-15)


def test_free_frame_grows_linearly(flat_free, start):
    frame = propagate_vertical(flat_free, start, 3.0, 1e-12, t_eval=np.array([1.0, 3.0]))
    assert np.allclose(frame.J[-1], 3.0 * np.eye(2), atol=1e-10)
    assert np.allclose(frame.P[-1], np.eye(2), atol=1e-10)
    with pytest.raises(ValueError):
        frame.at(2.0)


def test_sample_times():
    times = sample_times(1.0, 1e-6, 0.02)
    assert times[0] == 1e-6
    assert times[-1] == 1.0
    assert len(times) == 51
    assert np.all(np.diff(times) > 0)


# conjugate points

@pytest.mark.parametrize("strength", [1.0, 2.0])
def test_constant_field_conjugate_time(start, strength):
    model = catalog.constant_field(strength)
    expected = 2 * np.pi / strength
    report = first_conjugate_time(model, start, expected + 1.0)
    assert report.status == FOUND
    assert report.certified_by == "sigma_min"
    assert report.t_conj == pytest.approx(expected, abs=1e-6)
    # det J = (2 - 2 cos(B t)) / B^2
    closed = (2 - 2 * np.cos(strength * report.times)) / strength ** 2
    assert np.allclose(report.det_J, closed, atol=1e-8)


def test_constant_field_sampled_orbits(constant_field):
    for x0 in sample_initial_conditions(constant_field, 3, 99).points():
        report = scan_conjugate_time(constant_field, x0, 8.0)
        assert report.status == FOUND
        assert report.t_conj == pytest.approx(2 * np.pi, abs=1e-6)


@pytest.mark.slow
@pytest.mark.parametrize("strength", [0.5, 1.0, 2.0])
def test_constant_field_conjugate_time_over_many_orbits(strength):
    model = catalog.constant_field(strength)
    expected = 2 * np.pi / strength
    found = []
    for x0 in sample_initial_conditions(model, 100, 0).points():
        report = scan_conjugate_time(model, x0, expected + 1.0)
        assert report.status == FOUND
        found.append(report.t_conj)
    assert np.max(np.abs(np.array(found) - expected)) < 1e-6
    assert np.ptp(found) < 1e-6


@pytest.mark.slow
def test_mixed_field_conjugate_points_all_certified(mixed):
    points = sample_initial_conditions(mixed, 100, 0).points()
    reports = [scan_conjugate_time(mixed, x0, 20.0) for x0 in points]
    assert [r.status for r in reports] == [FOUND] * 100
    # det J changes sign just after the sampled sigma_min minimum
    assert reports[7].certified_by == "sign_change"
    assert reports[7].t_conj == pytest.approx(13.98129424, abs=1e-5)


@pytest.mark.slow
def test_mixed_field_conjugate_time_stable_under_tolerance(mixed):
    for x0 in sample_initial_conditions(mixed, 10, 0).points():
        coarse = scan_conjugate_time(mixed, x0, 20.0)
        fine = scan_conjugate_time(mixed, x0, 20.0, tol=0.5 * settings.conjugate_time_tol,
                                   integrator_tol=0.5 * settings.integrator_tol)
        assert coarse.status == fine.status == FOUND
        assert fine.t_conj == pytest.approx(coarse.t_conj, abs=1e-5)


def test_refined_minimum_reaches_zero_threshold(start, constant_field):
    # the dip at 2 pi sits far from t = 0, where a relative tolerance would stop short
    detector = ConjugateDetector(constant_field)
    frame = propagate_vertical(constant_field, start, 7.0, dense=True)
    t_min, s_min = detector._refine_minimum(frame, 6.26, 6.30)
    assert t_min == pytest.approx(2 * np.pi, abs=1e-8)
    assert s_min < settings.conjugate_zero_threshold


def test_flat_torus_has_no_conjugate_points(flat_free, start):
    with pytest.raises(NoConjugatePoint) as info:
        first_conjugate_time(flat_free, start, 20.0)
    report = info.value.report
    assert report.status == NONE
    assert np.allclose(report.det_J, report.times ** 2, rtol=1e-8)
    frame = report.trace_frame()
    assert list(frame.columns) == ["t", "detJ", "sigma_min"]


def test_uncertified_dip_is_ambiguous(monkeypatch, start, constant_field):
    monkeypatch.setattr(settings, "conjugate_zero_threshold", 0.0)
    report = scan_conjugate_time(constant_field, start, 7.0)
    assert report.status == AMBIGUOUS
    assert report.dip[0] == pytest.approx(2 * np.pi, abs=1e-5)
    with pytest.raises(DetectorAmbiguous):
        first_conjugate_time(constant_field, start, 7.0)


def test_horizon_validated(constant_field, start):
    with pytest.raises(ValueError):
        scan_conjugate_time(constant_field, start, 0.0)


# Riccati

def test_free_riccati_solution(flat_free, start):
    t_eval = np.array([0.0, 1.0, 4.0])
    history = propagate_riccati(flat_free, np.eye(2), start, 4.0, 1e-12, t_eval=t_eval)
    expected = np.eye(2)[None] / (1.0 + t_eval)[:, None, None]
    assert np.allclose(history.A, expected, atol=1e-10)
    assert not history.blew_up


def test_zero_graph_is_invariant_on_flat_torus(flat_free, start):
    history = propagate_riccati(flat_free, np.zeros((2, 2)), start, 5.0)
    assert np.max(np.abs(history.A)) < 1e-14


def test_non_lagrangian_initial_rejected(constant_field, start):
    with pytest.raises(InvalidInitial):
        propagate_riccati(constant_field, np.eye(2), start, 1.0)
    with pytest.raises(ValueError):
        propagate_riccati(constant_field, np.eye(3), start, 1.0)


def test_lagrangian_condition_preserved(constant_field, start):
    A0 = project_lagrangian(np.eye(2), constant_field.gamma)
    assert lagrangian_residual(A0, constant_field.gamma) < 1e-15
    history = propagate_riccati(constant_field, A0, start, 1.0)
    assert np.max(history.lagrangian_residuals()) < 1e-8


def test_riccati_matches_frame():
    model = catalog.conformal_family(0.3, dim=2)
    x0 = sample_initial_conditions(model, 1, 5).points()[0]
    A0 = 0.2 * np.eye(2)
    t_eval = np.linspace(0.5, 2.0, 4)
    frame = propagate_vertical(model, x0, 2.0, 1e-12, t_eval=t_eval, initial=(np.eye(2), A0))
    history = propagate_riccati(model, A0, x0, 2.0, 1e-12, t_eval=t_eval)
    assert np.allclose(riccati_from_frame(frame), history.A, atol=1e-8)


def test_blowup_at_conjugate_time(constant_field, start):
    epsilon = 1e-2
    A0, shifted = vertical_limit(constant_field, start, epsilon)
    history = propagate_riccati(constant_field, A0, shifted, 10.0)
    assert history.blew_up
    assert history.blowup_time + epsilon == pytest.approx(2 * np.pi, abs=1e-6)
    assert np.max(history.lagrangian_residuals()) < 1e-8


@pytest.mark.parametrize("name", ["suite-n2", "conformal-n2"])
def test_completed_square(suite, name):
    model = suite[name]
    x0 = sample_initial_conditions(model, 1, 17).points()[0]
    A0 = project_lagrangian(0.1 * np.eye(2), model.gamma)
    history = propagate_riccati(model, A0, x0, 2.0, 1e-12)
    potential = trace_integrand(history.blocks(model))
    assert np.allclose(trace_derivative(model, history) + potential,
                       -completed_square_defect(model, history), atol=1e-9)


def test_trace_inequality():
    model = catalog.conformal_family(0.3, dim=2)
    x0 = sample_initial_conditions(model, 1, 3).points()[0]
    t_eval = np.linspace(0.0, 3.0, 3001)
    for A0 in (np.zeros((2, 2)), np.eye(2), np.array([[0.3, 0.1], [0.1, 0.2]])):
        history = propagate_riccati(model, A0, x0, 3.0, 1e-12, t_eval=t_eval)
        assert trace_inequality_check(model, history) <= 1e-5


def test_trace_inequality_differenced_on_flat_torus(flat_free, start):
    t_eval = np.linspace(0.0, 3.0, 3001)
    # A = 0 stays 0: equality throughout
    zero = propagate_riccati(flat_free, np.zeros((2, 2)), start, 3.0, 1e-12, t_eval=t_eval)
    assert trace_inequality_check(flat_free, zero) == pytest.approx(0.0, abs=1e-12)
    # A = I / (1 + t): d(tr A)/dt = -2 / (1 + t)^2, largest at t = 3
    free = propagate_riccati(flat_free, np.eye(2), start, 3.0, 1e-12, t_eval=t_eval)
    assert trace_inequality_check(flat_free, free) == pytest.approx(-0.125, abs=1e-6)
    assert trace_inequality_check(flat_free, free, numerical=False) == pytest.approx(-0.125, abs=1e-9)


def test_trace_inequality_sees_a_corrupted_history(flat_free, start):
    t_eval = np.linspace(0.0, 3.0, 3001)
    history = propagate_riccati(flat_free, np.eye(2), start, 3.0, 1e-12, t_eval=t_eval)
    # tr A increasing in time cannot come from the equation
    grown = replace(history, A=np.eye(2)[None] * (1.0 + t_eval)[:, None, None])
    assert trace_inequality_check(flat_free, grown) == pytest.approx(2.0, abs=1e-6)
    assert trace_inequality_check(flat_free, grown, numerical=False) < 0.0


def test_completed_square_vanishes_on_equality_graph(suite, rng):
    model = suite["suite-n2"]
    q = rng.uniform(0, 2 * np.pi, (5, 2))
    p = rng.normal(size=(5, 2))
    blocks = hamiltonian_blocks(model, q, p, "H_tilde")
    history = RiccatiHistory(np.arange(5.0), q, p, equality_matrix(blocks), model.gamma)
    assert np.allclose(completed_square_defect(model, history), 0.0, atol=1e-12)
    shifted = replace(history, A=history.A + 0.1 * np.eye(2))
    assert np.all(completed_square_defect(model, shifted) > 0.0)


# stable Lagrangian field

def test_green_limit_decays_on_flat_torus(flat_free, start):
    result = green_limit(flat_free, start, [10.0, 20.0, 40.0])
    assert result.flagged_times == []
    assert result.ratios == pytest.approx([0.5, 0.5], abs=1e-8)
    assert np.allclose(result.samples[-1].A, np.eye(2) / 40.0, atol=1e-10)
    assert result.cauchy[0] == pytest.approx(np.sqrt(2) * (0.1 - 0.05), abs=1e-9)


def test_green_limit_flags_conjugate_horizons(constant_field, start):
    result = green_limit(constant_field, start, [5.0, 2 * np.pi, 10.0])
    assert result.flagged_times == pytest.approx([2 * np.pi])
    records = result.to_records()
    assert records[1]["singular"] and records[1]["A"] is None
    assert records[2]["cauchy"] is None
    assert records[0]["lagrangian_residual"] < 1e-8


def test_green_limit_needs_increasing_times(flat_free, start):
    with pytest.raises(ValueError):
        green_limit(flat_free, start, [10.0, 5.0])
