"""
Invariant suite run by ``validate``

Every check returns a CheckResult; exceptions inside a check are recorded as
failures and never stop the suite.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Union

import numpy as np
import pandas as pd

from ..averaging.quadrature import QuadratureGrid
from ..averaging.sigma import gauge_invariance_check, odd_integrand_check, sigma_closed_form, sigma_direct, total_mass
from ..config.settings import settings
from ..dynamics.trajectory import PhasePoint, integrate
from ..dynamics.vector_fields import energy_rate, twisted_vector_field
from ..geometry.hamiltonian import finite_difference_error, inverse_gauge_map
from ..geometry.model import MagneticModel
from ..geometry.model_file import load_model, model_to_spec, parse_model_text, serialize_model
from ..utils.logger import get_logger
from ..variational.conjugate import FOUND, NONE, scan_conjugate_time
from ..variational.frames import finite_difference_frame, propagate_vertical
from ..variational.green import green_limit
from ..variational.linearized import jacobian_difference_error
from ..variational.riccati import propagate_riccati, trace_inequality_check, vertical_limit
from . import catalog
from .sampling import sample_initial_conditions

logger = get_logger("lab.validation")


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: str = ""
    seconds: float = 0.0


@dataclass
class ValidationReport:
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def to_dict(self) -> dict:
        # timings stay out of the document so reports are reproducible
        checks = [{k: v for k, v in asdict(c).items() if k != "seconds"} for c in self.checks]
        return {"passed": self.passed, "failures": self.failures, "checks": checks}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(c) for c in self.checks])


def _bounded(name: str, value: float, threshold: float, detail: str = "") -> CheckResult:
    return CheckResult(name, bool(value < threshold), float(value), threshold, detail)


# model

def _oracle_models() -> List[MagneticModel]:
    return [catalog.flat_exact(), catalog.mixed(), catalog.conformal_potential(3)] + list(catalog.gauge_suite().values())


def check_derivative_oracle(states: int = 100) -> CheckResult:
    rng = np.random.default_rng(settings.default_seed)
    models = _oracle_models()
    worst = 0.0
    for model in models:
        for _ in range(states):
            q = rng.uniform(0.0, 2 * np.pi, model.dim)
            p = rng.normal(size=model.dim)
            for which in ("H", "H_tilde"):
                worst = max(worst, finite_difference_error(model, q, p, which))
    return _bounded("derivative_oracle", worst, 1e-6, f"{len(models)} models x {states} states")


def check_linearized_oracle(states: int = 100) -> CheckResult:
    rng = np.random.default_rng(settings.default_seed + 2)
    models = _oracle_models()
    worst = 0.0
    for model in models:
        for _ in range(states):
            q = rng.uniform(0.0, 2 * np.pi, model.dim)
            p = rng.normal(size=model.dim)
            worst = max(worst, jacobian_difference_error(model, q, p))
    return _bounded("linearized_oracle", worst, 1e-6, f"{len(models)} models x {states} states")


def check_twist_orientation() -> CheckResult:
    _, p_dot = twisted_vector_field(catalog.constant_field(1.0), np.zeros(2), np.array([1.0, 0.0]))
    deviation = float(np.max(np.abs(p_dot - np.array([0.0, -1.0]))))
    return _bounded("twist_orientation", deviation, 1e-14, "B = 1, p = (1, 0) gives p_dot = (0, -1)")


def check_tangency() -> CheckResult:
    rng = np.random.default_rng(settings.default_seed + 1)
    worst = 0.0
    for model in (catalog.mixed(), catalog.flat_exact(), catalog.gauge_suite()["suite-n2"]):
        q = rng.uniform(0.0, 2 * np.pi, (1000, model.dim))
        p = rng.normal(size=(1000, model.dim))
        worst = max(worst, float(np.max(np.abs(energy_rate(model, q, p)))))
    return _bounded("tangency", worst, 1e-12, "dH/dt of the twisted field at 1000 points")


# dynamics

def check_energy_conservation() -> CheckResult:
    worst = 0.0
    for model in (catalog.mixed(), catalog.conformal_potential(3)):
        x0 = sample_initial_conditions(model, 1, settings.default_seed).points()[0]
        trajectory = integrate(model, x0, 100.0, 1e-10)
        worst = max(worst, float(np.max(np.abs(trajectory.energy - 0.5))))
    return _bounded("energy_conservation", worst, 1e-9, "T = 100, tol = 1e-10")


def check_gauge_equivalence() -> CheckResult:
    model = catalog.flat_exact()
    x0 = sample_initial_conditions(model, 1, settings.default_seed).points()[0]
    t_eval = np.linspace(0.0, 50.0, 501)
    gauged = integrate(model, x0, 50.0, 1e-12, t_eval=t_eval, formulation="gauged")
    twisted = integrate(model, PhasePoint(x0.q, inverse_gauge_map(model, x0.q, x0.p)), 50.0, 1e-12,
                        t_eval=t_eval, formulation="twisted")
    deviation = float(np.max(np.abs(gauged.q_lift - twisted.q_lift)))
    return _bounded("gauge_equivalence", deviation, 1e-8, "exact field, T = 50")


# variational

def check_flow_map_oracle() -> CheckResult:
    worst = 0.0
    for model in (catalog.mixed(), catalog.gauge_suite()["suite-n2"], catalog.conformal_potential(3)):
        x0 = sample_initial_conditions(model, 1, settings.default_seed).points()[0]
        frame = propagate_vertical(model, x0, 2.0, 1e-13, t_eval=np.array([2.0]))
        J, P = finite_difference_frame(model, x0, 2.0, 1e-6, 1e-13)
        worst = max(worst, float(np.max(np.abs(frame.J[-1] - J))), float(np.max(np.abs(frame.P[-1] - P))))
    return _bounded("flow_map_oracle", worst, 1e-5, "vertical frame vs p0 perturbed by 1e-6, T = 2")


def check_constant_field_conjugate(samples: int = 100) -> CheckResult:
    worst, spread = 0.0, 0.0
    for strength in (0.5, 1.0, 2.0):
        model = catalog.constant_field(strength)
        expected = 2 * np.pi / abs(strength)
        found = []
        for x0 in sample_initial_conditions(model, samples, settings.default_seed).points():
            report = scan_conjugate_time(model, x0, expected + 1.0)
            if report.status != FOUND:
                return CheckResult("constant_field_conjugate", False, None, 1e-6,
                                   f"B = {strength}: status {report.status}")
            found.append(report.t_conj)
        worst = max(worst, float(np.max(np.abs(np.array(found) - expected))))
        spread = max(spread, float(np.ptp(found)))
    return CheckResult("constant_field_conjugate", bool(worst < 1e-6 and spread < 1e-6), worst, 1e-6,
                       f"B in {{0.5, 1, 2}}, {samples} orbits each, spread {spread:.2e}")


def check_field_conjugate_scan(samples: int = 100, t_max: float = 20.0, repeats: int = 10,
                               seed: int = 0) -> CheckResult:
    model = catalog.mixed()
    points = sample_initial_conditions(model, samples, seed).points()
    reports = [scan_conjugate_time(model, x0, t_max) for x0 in points]
    missing = [i for i, report in enumerate(reports) if report.status != FOUND]
    if missing:
        return CheckResult("field_conjugate_scan", False, None, 1e-5,
                           f"{len(missing)}/{samples} orbits without a certified conjugate point, first {missing[0]}")
    worst = 0.0
    for x0, report in zip(points[:repeats], reports):
        halved = scan_conjugate_time(model, x0, t_max, tol=0.5 * settings.conjugate_time_tol,
                                     integrator_tol=0.5 * settings.integrator_tol)
        if halved.status != FOUND:
            return CheckResult("field_conjugate_scan", False, None, 1e-5, "halved tolerances lost a conjugate point")
        worst = max(worst, abs(halved.t_conj - report.t_conj))
    return _bounded("field_conjugate_scan", worst, 1e-5,
                    f"{model.name}: {samples}/{samples} found, halved tolerances on {repeats}")


def check_flat_control(samples: int = 100) -> CheckResult:
    model = catalog.flat_free()
    worst = 0.0
    for x0 in sample_initial_conditions(model, samples, settings.default_seed).points():
        report = scan_conjugate_time(model, x0, 100.0)
        if report.status != NONE:
            return CheckResult("flat_control", False, None, 1e-8, f"status {report.status}")
        deviation = np.abs(report.det_J - report.times ** 2) / np.maximum(1.0, report.times ** 2)
        worst = max(worst, float(np.max(deviation)))
    return _bounded("flat_control", worst, 1e-8, "no conjugate point in (0, 100], det J = t^2")


def check_jacobi_riccati() -> CheckResult:
    model = catalog.constant_field(1.0)
    x0 = sample_initial_conditions(model, 1, settings.default_seed).points()[0]
    epsilon = 1e-2
    A0, start = vertical_limit(model, x0, epsilon)
    history = propagate_riccati(model, A0, start, 10.0)
    if not history.blew_up:
        return CheckResult("jacobi_riccati", False, None, 1e-6, "Riccati solution did not blow up")
    error = abs(history.blowup_time + epsilon - 2 * np.pi)
    residual = float(np.max(history.lagrangian_residuals()))
    return CheckResult("jacobi_riccati", bool(error < 1e-6 and residual < 1e-8), error, 1e-6,
                       f"Lagrangian residual {residual:.2e}")


def check_trace_inequality() -> CheckResult:
    worst = -np.inf
    model = catalog.conformal_family(0.3, dim=2)
    x0 = sample_initial_conditions(model, 1, settings.default_seed).points()[0]
    t_eval = np.linspace(0.0, 3.0, 3001)
    for A0 in (np.zeros((2, 2)), np.eye(2), np.array([[0.3, 0.1], [0.1, 0.2]])):
        history = propagate_riccati(model, A0, x0, 3.0, 1e-12, t_eval=t_eval)
        worst = max(worst, trace_inequality_check(model, history))
    return _bounded("trace_inequality", worst, 1e-5,
                    "nonconstant lambda, three initial graphs, d(tr A)/dt differenced on 3001 samples")


def check_green_limit() -> CheckResult:
    flat = green_limit(catalog.flat_free(), PhasePoint(np.zeros(2), np.array([1.0, 0.0])), [10.0, 20.0, 40.0])
    ratios = [r for r in flat.ratios if r is not None]
    decay_ok = len(ratios) == 2 and all(abs(r - 0.5) <= 0.1 for r in ratios)
    times = [5.0, 2 * np.pi, 10.0, 4 * np.pi]
    field = green_limit(catalog.constant_field(1.0), PhasePoint(np.zeros(2), np.array([1.0, 0.0])), times)
    flagged_ok = np.allclose(field.flagged_times, [2 * np.pi, 4 * np.pi]) and len(field.flagged_times) == 2
    return CheckResult("green_limit", bool(decay_ok and flagged_ok), None, None,
                       f"ratios {ratios}, flagged {field.flagged_times}")


# averaging

def check_gauge_invariance() -> CheckResult:
    worst_gauge, worst_odd = 0.0, 0.0
    for model in catalog.gauge_suite().values():
        grid = QuadratureGrid.for_model(model, sphere_order=None if model.dim == 2 else 6)
        worst_gauge = max(worst_gauge, gauge_invariance_check(model, grid))
        worst_odd = max(worst_odd, abs(odd_integrand_check(model, grid)))
    passed = worst_gauge < 1e-8 and worst_odd < 1e-12
    return CheckResult("gauge_invariance", passed, worst_gauge, 1e-8, f"odd integrand {worst_odd:.2e}")


def check_closed_form() -> CheckResult:
    worst = 0.0
    positive = True
    for epsilon in (0.1, 0.3):
        model = catalog.conformal_family(epsilon)
        direct = sigma_direct(model, "H", QuadratureGrid.for_model(model, sphere_order=4),
                              check_convergence=False).value
        closed = sigma_closed_form(model)
        worst = max(worst, abs(direct - closed) / abs(closed))
        positive = positive and direct > 0
    flat = sigma_direct(catalog.conformal_family(0.3, dim=2), "H", check_convergence=False).value
    passed = worst < 1e-6 and positive and abs(flat) < 1e-10
    return CheckResult("closed_form", passed, worst, 1e-6, f"n = 2 value {flat:.2e}, positive {positive}")


def check_measure() -> CheckResult:
    model = catalog.conformal_potential(3)
    mass = total_mass(model, QuadratureGrid.for_model(model, sphere_order=4))
    return _bounded("measure", mass.difference / abs(mass.direct), 1e-10,
                    "direct sum vs FFT zero mode on the doubled grid")


# files

def check_model_files(paths: Iterable[Path]) -> CheckResult:
    paths = sorted(paths)
    for path in paths:
        model = load_model(path)
        reparsed = parse_model_text(serialize_model(model))
        if reparsed != model_to_spec(model):
            return CheckResult("model_files", False, None, None, f"{path.name} does not round-trip")
    return CheckResult("model_files", True, float(len(paths)), None, f"{len(paths)} bundled models")


def check_model_construction(path: Union[str, Path]) -> CheckResult:
    model = load_model(path)
    return CheckResult("model_construction", True, model.conformal.lower_bound, None, f"{Path(path).name}")


CHECKS: List[Callable[[], CheckResult]] = [
    check_derivative_oracle,
    check_linearized_oracle,
    check_twist_orientation,
    check_tangency,
    check_energy_conservation,
    check_gauge_equivalence,
    check_flow_map_oracle,
    check_constant_field_conjugate,
    check_field_conjugate_scan,
    check_flat_control,
    check_jacobi_riccati,
    check_trace_inequality,
    check_green_limit,
    check_gauge_invariance,
    check_closed_form,
    check_measure,
]


def _guarded(name: str, check: Callable[[], CheckResult]) -> CheckResult:
    started = time.perf_counter()
    try:
        result = check()
    except Exception as e:
        logger.error(f"check {name} raised {type(e).__name__}: {e}")
        result = CheckResult(name, False, None, None, f"{type(e).__name__}: {e}")
    result.seconds = time.perf_counter() - started
    level = "passed" if result.passed else "FAILED"
    logger.info(f"{result.name}: {level} ({result.seconds:.1f}s) {result.detail}")
    return result


def run_validate(models_dir: Union[str, Path, None] = None, model: Union[str, Path, None] = None,
                 checks: Optional[List[Callable[[], CheckResult]]] = None) -> ValidationReport:
    """Run the invariant suite; a model file, when given, must construct cleanly"""
    results = [_guarded(check.__name__.replace("check_", ""), check) for check in (checks or CHECKS)]
    directory = Path(models_dir or settings.models_dir)
    if directory.is_dir():
        results.append(_guarded("model_files", lambda: check_model_files(directory.glob("*.json"))))
    if model is not None:
        results.append(_guarded("model_construction", lambda: check_model_construction(model)))
    report = ValidationReport(results)
    logger.info(f"validation {'passed' if report.passed else 'failed'}: "
                f"{len(results) - len(report.failures)}/{len(results)} checks")
    return report
