"""
Experiment implementations dispatched by the runner

Each ``run_*`` function takes the validated config, the certified model and
the run's ArtifactWriter, writes its outputs and returns a summary dict.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..averaging.quadrature import QuadratureGrid
from ..averaging.sigma import level_parametrize, sigma_report
from ..dynamics.trajectory import PhasePoint, integrate, normalize_energy
from ..geometry.forms import check_closed
from ..geometry.hamiltonian import inverse_gauge_map
from ..geometry.model import MagneticModel
from ..geometry.model_file import model_to_spec
from ..storage.writers import ArtifactWriter
from ..utils.errors import TorusLabError
from ..utils.logger import get_logger
from ..variational.conjugate import AMBIGUOUS, FOUND, NONE, scan_conjugate_time
from ..variational.green import green_limit
from .sampling import InitialConditions, sample_initial_conditions
from .schemas import ExperimentConfig

logger = get_logger("lab.experiments")

ERROR = "error"

ScanTask = Tuple[MagneticModel, np.ndarray, np.ndarray, float, float, Optional[str], bool]


def initial_point(config: ExperimentConfig, model: MagneticModel) -> PhasePoint:
    """Configured start on the energy level; default q = 0 moving along e_1"""
    n = model.dim
    q = np.zeros(n) if config.initial_q is None else np.asarray(config.initial_q, dtype=float)
    if len(q) != n:
        raise ValueError(f"initial_q has length {len(q)}, model dimension is {n}")
    if config.initial_p is None:
        p = level_parametrize(model, q, np.eye(n)[0], config.formulation).p
        return PhasePoint(q, p)
    return normalize_energy(model, (q, np.asarray(config.initial_p, dtype=float)), config.formulation)


# integrate

def run_integrate(config: ExperimentConfig, model: MagneticModel, writer: ArtifactWriter,
                  model_hash: str = "") -> Dict[str, Any]:
    x0 = initial_point(config, model)
    t_eval = np.linspace(0.0, config.T, config.samples_out)
    trajectory = integrate(model, x0, config.T, config.tol, t_eval=t_eval,
                           formulation=config.formulation, method=config.method)
    writer.csv("trajectory.csv", trajectory.to_frame())

    summary: Dict[str, Any] = {
        "formulation": config.formulation,
        "T": config.T,
        "steps": trajectory.steps,
        "max_energy_drift": trajectory.max_energy_drift,
        "final_energy": float(trajectory.energy[-1]),
    }
    if config.formulation == "gauged" and not model.alpha.is_zero:
        twisted_start = PhasePoint(x0.q, inverse_gauge_map(model, x0.q, x0.p))
        twisted = integrate(model, twisted_start, config.T, config.tol, t_eval=t_eval,
                            formulation="twisted", method=config.method)
        summary["gauge_deviation"] = float(np.max(np.abs(twisted.q_lift - trajectory.q_lift)))
    logger.info(f"integrated {model.name} to T={config.T:g}: drift {trajectory.max_energy_drift:.2e}")
    return summary


# conjugate scan

def _scan_orbit(task: ScanTask) -> Dict[str, Any]:
    model, q, p, t_max, tol, method, keep_trace = task
    try:
        report = scan_conjugate_time(model, (q, p), t_max, integrator_tol=tol, method=method)
    except TorusLabError as e:
        logger.warning(f"{model.name}: orbit from q={np.round(q, 6).tolist()} failed: {e}")
        return {"status": ERROR, "t_conj": None, "message": str(e), "trace": None}
    trace = report.trace_frame() if keep_trace else None
    return {"status": report.status, "t_conj": report.t_conj, "message": report.message, "trace": trace}


def scan_orbits(model: MagneticModel, initial: InitialConditions, t_max: float, tol: float,
                method: Optional[str] = None, workers: int = 1, keep_traces: bool = False) -> List[Dict[str, Any]]:
    """Detector results in initial-condition order"""
    tasks = [(model, q, p, t_max, tol, method, keep_traces) for q, p in zip(initial.q, initial.p)]
    if workers <= 1:
        return [_scan_orbit(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_scan_orbit, tasks))


def scan_frame(initial: InitialConditions, results: List[Dict[str, Any]]) -> pd.DataFrame:
    """Columns id, q0_1..q0_n, dir_1..dir_n, t_conj, status (found, none, ambiguous or error)"""
    n = initial.q.shape[1]
    columns: Dict[str, Any] = {"id": np.arange(len(results))}
    for i in range(n):
        columns[f"q0_{i + 1}"] = initial.q[:, i]
    for i in range(n):
        columns[f"dir_{i + 1}"] = initial.directions[:, i]
    columns["t_conj"] = [np.nan if r["t_conj"] is None else r["t_conj"] for r in results]
    columns["status"] = [r["status"] for r in results]
    return pd.DataFrame(columns)


def summarize_scan(results: List[Dict[str, Any]]) -> Dict[str, Any]:
    times = np.array([r["t_conj"] for r in results if r["status"] == FOUND], dtype=float)
    count = len(results)
    return {
        "samples": count,
        "found": int(sum(r["status"] == FOUND for r in results)),
        "none": int(sum(r["status"] == NONE for r in results)),
        "ambiguous": int(sum(r["status"] == AMBIGUOUS for r in results)),
        "errors": int(sum(r["status"] == ERROR for r in results)),
        "fraction_found": float(len(times) / count) if count else 0.0,
        "t_conj_min": float(times.min()) if len(times) else None,
        "t_conj_median": float(np.median(times)) if len(times) else None,
        "t_conj_max": float(times.max()) if len(times) else None,
    }


def _scan_arm(config: ExperimentConfig, model: MagneticModel, initial: InitialConditions,
              writer: ArtifactWriter, prefix: str) -> Dict[str, Any]:
    results = scan_orbits(model, initial, config.t_max, config.tol, config.method,
                          config.workers, config.dump_traces)
    writer.csv(f"{prefix}.csv", scan_frame(initial, results))
    if config.dump_traces:
        for index, result in enumerate(results):
            if result["trace"] is not None:
                writer.csv(f"traces/{prefix}_{index:04d}.csv", result["trace"])
    summary = summarize_scan(results)
    logger.info(
        f"{prefix} on {model.name}: {summary['found']}/{summary['samples']} certified, "
        f"{summary['ambiguous']} ambiguous, {summary['errors']} failed, median t* {summary['t_conj_median']}"
    )
    return summary


def run_conjugate_scan(config: ExperimentConfig, model: MagneticModel, writer: ArtifactWriter,
                       model_hash: str = "") -> Dict[str, Any]:
    """Sample the level, locate first conjugate times, optionally rerun with beta removed"""
    initial = sample_initial_conditions(model, config.samples, config.seed)
    summary: Dict[str, Any] = {"t_max": config.t_max, "has_field": model.has_field}
    summary["scan"] = _scan_arm(config, model, initial, writer, "conjugate_scan")
    if config.control:
        control = model.without_field()
        control_initial = sample_initial_conditions(control, config.samples, config.seed)
        summary["control"] = _scan_arm(config, control, control_initial, writer, "conjugate_scan_control")
    return summary


# sigma

def run_sigma(config: ExperimentConfig, model: MagneticModel, writer: ArtifactWriter,
              model_hash: str = "") -> Dict[str, Any]:
    grid = QuadratureGrid.for_model(model, config.grid, config.sphere)
    report = sigma_report(model, grid, model_hash)
    writer.json("sigma_report.json", report)
    keys = ("sigma_H", "sigma_H_tilde", "sigma_closed_form", "discrepancy_gauge", "odd_integrand", "converged")
    return {key: report[key] for key in keys}


# green limit

def run_green_limit(config: ExperimentConfig, model: MagneticModel, writer: ArtifactWriter,
                    model_hash: str = "") -> Dict[str, Any]:
    x = initial_point(config.model_copy(update={"formulation": "gauged"}), model)
    result = green_limit(model, x, config.times, config.tol)
    writer.json("green_limit.json", {
        "model": model.name,
        "model_hash": model_hash,
        "point": {"q": x.q.tolist(), "p": x.p.tolist()},
        "samples": result.to_records(),
    })
    return {
        "times": list(config.times),
        "flagged": result.flagged_times,
        "ratios": result.ratios,
        "cauchy": result.cauchy,
    }


# decompose

def run_decompose(config: ExperimentConfig, model: MagneticModel, writer: ArtifactWriter,
                  model_hash: str = "") -> Dict[str, Any]:
    spec = model_to_spec(model).model_dump(mode="json")
    document = {
        "model": model.name,
        "model_hash": model_hash,
        "closedness_residual": check_closed(model.beta),
        "reconstruction_residual": model.gauge.reconstruction_residual(model.beta),
        "gamma": np.asarray(model.gamma).tolist(),
        "potential": spec["potential"],
        "harmonic": spec["harmonic"],
    }
    writer.json("gauge.json", document)
    return {key: document[key] for key in ("closedness_residual", "reconstruction_residual", "gamma")}
