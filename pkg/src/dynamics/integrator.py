"""
Step-controlled ODE integration on top of the scipy OdeSolver step API

The adaptive methods (DOP853, RK45) are driven one step at a time so that
the step size can be policed, samples taken from each step's dense output,
and an optional monitor can stop the run (Riccati blow-up detection).
``midpoint`` is the fixed-step implicit midpoint rule solved by fixed-point
iteration, with cubic Hermite interpolation between steps.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.integrate import DOP853, RK45, OdeSolution
from scipy.interpolate import CubicHermiteSpline

from ..config.settings import settings
from ..utils.errors import IntegrationError, StepSizeCollapse
from ..utils.logger import get_logger

RightHandSide = Callable[[float, np.ndarray], np.ndarray]
# monitor(t, y, step) -> True to stop the integration after this step
Monitor = Callable[[float, np.ndarray, float], bool]

ADAPTIVE_METHODS = {"DOP853": DOP853, "RK45": RK45}
METHODS = tuple(ADAPTIVE_METHODS) + ("midpoint",)


def minimum_step(span: float) -> float:
    return settings.min_step_factor * max(1.0, abs(span))


class DenseSolution:
    """Continuous extension of a run, evaluated as ``(..., dim)`` arrays"""

    def __init__(self, interpolant, t_min: float, t_max: float, transpose: bool):
        self._interpolant = interpolant
        self._transpose = transpose
        self.t_min = t_min
        self.t_max = t_max

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t_min - 1e-12) or np.any(t > self.t_max + 1e-12):
            raise ValueError(f"dense output requested outside [{self.t_min}, {self.t_max}]")
        values = self._interpolant(np.clip(t, self.t_min, self.t_max))
        if self._transpose and t.ndim == 1:
            values = values.T
        return np.asarray(values)


@dataclass
class IntegrationResult:
    t: np.ndarray
    y: np.ndarray                      # (len(t), dim)
    method: str
    nsteps: int
    nfev: int
    min_step: float
    max_step: float
    dense: Optional[DenseSolution] = None
    stopped_at: Optional[float] = None

    @property
    def stopped(self) -> bool:
        return self.stopped_at is not None


class FlowIntegrator:
    """Integrates y' = f(t, y) from t0 to t1 > t0"""

    def __init__(self, method: Optional[str] = None, tol: Optional[float] = None):
        self.method = method or settings.integrator_method
        if self.method not in METHODS:
            raise ValueError(f"unknown integrator '{self.method}', expected one of {METHODS}")
        self.tol = settings.integrator_tol if tol is None else float(tol)
        self.logger = get_logger("dynamics.integrator")

    def solve(
        self,
        fun: RightHandSide,
        t_span: Sequence[float],
        y0: np.ndarray,
        t_eval: Optional[np.ndarray] = None,
        dense: bool = False,
        monitor: Optional[Monitor] = None,
    ) -> IntegrationResult:
        t0, t1 = float(t_span[0]), float(t_span[1])
        if not t1 > t0:
            raise ValueError(f"integration span must be increasing, got [{t0}, {t1}]")
        y0 = np.asarray(y0, dtype=float)
        if t_eval is not None:
            t_eval = np.asarray(t_eval, dtype=float)
            if t_eval.ndim != 1 or np.any(np.diff(t_eval) <= 0):
                raise ValueError("t_eval must be a strictly increasing 1-d array")
            if t_eval.size and (t_eval[0] < t0 or t_eval[-1] > t1):
                raise ValueError(f"t_eval must lie in [{t0}, {t1}]")

        if self.method == "midpoint":
            return self._solve_midpoint(fun, t0, t1, y0, t_eval, dense, monitor)
        return self._solve_adaptive(fun, t0, t1, y0, t_eval, dense, monitor)

    def _solve_adaptive(self, fun, t0, t1, y0, t_eval, dense, monitor) -> IntegrationResult:
        solver = ADAPTIVE_METHODS[self.method](fun, t0, y0, t1, rtol=self.tol, atol=self.tol)
        floor = minimum_step(t1 - t0)

        times: List[float] = []
        states: List[np.ndarray] = []
        cursor = 0
        if t_eval is None:
            times.append(t0)
            states.append(y0.copy())
        else:
            while cursor < len(t_eval) and t_eval[cursor] <= t0:
                times.append(float(t_eval[cursor]))
                states.append(y0.copy())
                cursor += 1

        segment_times = [t0]
        interpolants = []
        nsteps = 0
        smallest, largest = np.inf, 0.0
        stopped_at = None

        while solver.status == "running":
            message = solver.step()
            if solver.status == "failed":
                step = float(getattr(solver, "h_abs", 0.0))
                self.logger.debug(f"{self.method} failed at t={solver.t:.9g}: {message}")
                raise StepSizeCollapse(float(solver.t), step, floor)

            nsteps += 1
            if nsteps > settings.max_steps:
                raise IntegrationError(f"exceeded {settings.max_steps} steps at t={solver.t:.9g}")
            step = solver.t - solver.t_old
            smallest, largest = min(smallest, step), max(largest, step)

            local = None
            if dense or t_eval is not None:
                local = solver.dense_output()
            if dense:
                segment_times.append(solver.t)
                interpolants.append(local)
            if t_eval is None:
                times.append(solver.t)
                states.append(solver.y.copy())
            else:
                while cursor < len(t_eval) and t_eval[cursor] <= solver.t:
                    times.append(float(t_eval[cursor]))
                    states.append(np.asarray(local(t_eval[cursor])))
                    cursor += 1

            if monitor is not None and monitor(solver.t, solver.y, step):
                stopped_at = float(solver.t)
                break
            if solver.status == "running" and step < floor:
                raise StepSizeCollapse(float(solver.t), step, floor)

        solution = None
        if dense:
            solution = DenseSolution(OdeSolution(segment_times, interpolants), t0, segment_times[-1], True)
        return IntegrationResult(
            t=np.asarray(times),
            y=np.asarray(states).reshape(len(times), y0.size),
            method=self.method,
            nsteps=nsteps,
            nfev=int(solver.nfev),
            min_step=float(smallest) if nsteps else 0.0,
            max_step=float(largest),
            dense=solution,
            stopped_at=stopped_at,
        )

    def _solve_midpoint(self, fun, t0, t1, y0, t_eval, dense, monitor) -> IntegrationResult:
        count = max(1, int(np.ceil((t1 - t0) / settings.midpoint_step)))
        h = (t1 - t0) / count
        grid = t0 + h * np.arange(count + 1)
        grid[-1] = t1

        states = [y0.copy()]
        slopes = [np.asarray(fun(t0, y0), dtype=float)]
        nfev = 1
        stopped_at = None
        y = y0.copy()
        for i in range(count):
            midpoint_time = grid[i] + 0.5 * h
            z = y + h * slopes[-1]
            for _ in range(settings.midpoint_iterations):
                z_next = y + h * np.asarray(fun(midpoint_time, 0.5 * (y + z)), dtype=float)
                nfev += 1
                converged = np.linalg.norm(z_next - z) <= self.tol * (1.0 + np.linalg.norm(z_next))
                z = z_next
                if converged:
                    break
            else:
                raise IntegrationError(f"implicit midpoint iteration did not converge at t={grid[i]:.9g}")
            y = z
            states.append(y.copy())
            slopes.append(np.asarray(fun(grid[i + 1], y), dtype=float))
            nfev += 1
            if monitor is not None and monitor(grid[i + 1], y, h):
                stopped_at = float(grid[i + 1])
                grid = grid[: i + 2]
                break

        states_arr = np.asarray(states)
        spline = CubicHermiteSpline(grid, states_arr, np.asarray(slopes), axis=0)
        end = float(grid[-1])
        if t_eval is None:
            times, samples = grid, states_arr
        else:
            times = t_eval[t_eval <= end]
            samples = spline(times)
        return IntegrationResult(
            t=np.asarray(times, dtype=float),
            y=np.asarray(samples).reshape(len(times), y0.size),
            method=self.method,
            nsteps=len(grid) - 1,
            nfev=nfev,
            min_step=h,
            max_step=h,
            dense=DenseSolution(spline, t0, end, False) if dense else None,
            stopped_at=stopped_at,
        )
