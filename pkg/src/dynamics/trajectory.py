"""
Phase points, trajectories and the flow g^t on the energy level {H = 1/2}
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..config.settings import settings
from ..geometry.hamiltonian import Formulation, as_formulation, hamiltonian_value, kinetic_momentum
from ..geometry.model import MagneticModel
from ..geometry.trig_poly import TWO_PI
from ..utils.errors import ZeroVelocity
from ..utils.logger import get_logger
from .integrator import FlowIntegrator
from .vector_fields import PhaseFlow

logger = get_logger("dynamics.trajectory")

TOL_RANGE = (1e-13, 1e-4)


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """(q, p) with q wrapped into [0, 2pi)^n"""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.mod(np.array(self.q, dtype=float), TWO_PI)
        p = np.array(self.p, dtype=float)
        if q.shape != p.shape or q.ndim != 1:
            raise ValueError(f"q and p must be 1-d arrays of equal length, got {q.shape} and {p.shape}")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_state(cls, y: np.ndarray) -> "PhasePoint":
        n = len(y) // 2
        return cls(y[:n], y[n:])

    @property
    def dim(self) -> int:
        return len(self.q)

    def state(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])


PointLike = Union[PhasePoint, Tuple[np.ndarray, np.ndarray]]


def as_phase_point(x: PointLike) -> PhasePoint:
    if isinstance(x, PhasePoint):
        return x
    q, p = x
    return PhasePoint(q, p)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-stamped orbit samples with the unwrapped q-lift"""

    formulation: Formulation
    direction: int
    times: np.ndarray
    q_lift: np.ndarray
    p: np.ndarray
    energy: np.ndarray
    steps: int
    nfev: int
    method: str
    tol: float
    max_energy_drift: float = field(init=False)

    def __post_init__(self):
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        drift = float(np.max(np.abs(self.energy - self.energy[0]))) if len(self.energy) else 0.0
        object.__setattr__(self, "max_energy_drift", drift)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.q_lift.shape[1]

    @property
    def q(self) -> np.ndarray:
        return np.mod(self.q_lift, TWO_PI)

    def point(self, index: int) -> PhasePoint:
        return PhasePoint(self.q_lift[index], self.p[index])

    @property
    def final(self) -> PhasePoint:
        return self.point(-1)

    def to_frame(self) -> pd.DataFrame:
        """Columns t, q1..qn, p1..pn, H"""
        n = self.dim
        columns = {"t": self.times}
        q = self.q
        for i in range(n):
            columns[f"q{i + 1}"] = q[:, i]
        for i in range(n):
            columns[f"p{i + 1}"] = self.p[:, i]
        columns["H"] = self.energy
        return pd.DataFrame(columns)


def normalize_energy(model: MagneticModel, x: PointLike, formulation="gauged") -> PhasePoint:
    """Rescale the kinetic momentum so that the point lies on {H = 1/2}"""
    x = as_phase_point(x)
    which = as_formulation(formulation)
    u = kinetic_momentum(model, x.q, x.p, which)
    speed2 = float(model.lam(x.q) * np.dot(u, u))
    if speed2 <= np.finfo(float).tiny:
        raise ZeroVelocity(f"kinetic momentum vanishes at q={x.q.tolist()}")
    u = u / np.sqrt(speed2)
    return PhasePoint(x.q, x.p - kinetic_momentum(model, x.q, x.p, which) + u)


def integrate(
    model: MagneticModel,
    x0: PointLike,
    T: float,
    tol: Optional[float] = None,
    *,
    t_eval: Optional[np.ndarray] = None,
    formulation="gauged",
    direction: int = 1,
    method: Optional[str] = None,
) -> Trajectory:
    """Integrate g^t (direction = 1) or g^{-t} (direction = -1) for 0 <= t <= T

    Without ``t_eval`` the samples are the accepted step points.
    """
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    tol = settings.integrator_tol if tol is None else float(tol)
    if not TOL_RANGE[0] <= tol <= TOL_RANGE[1]:
        raise ValueError(f"tol must lie in [{TOL_RANGE[0]:g}, {TOL_RANGE[1]:g}], got {tol:g}")

    which = as_formulation(formulation)
    x0 = as_phase_point(x0)
    flow = PhaseFlow(model, which, direction)
    result = FlowIntegrator(method, tol).solve(flow, (0.0, float(T)), x0.state(), t_eval=t_eval)

    n = model.dim
    q_lift, p = result.y[:, :n], result.y[:, n:]
    energy = hamiltonian_value(model, np.mod(q_lift, TWO_PI), p, which)
    trajectory = Trajectory(which, direction, result.t, q_lift, p, energy,
                            result.nsteps, result.nfev, result.method, tol)
    logger.debug(
        f"integrated {model.name} ({which.value}, dir {direction:+d}) to T={T:g}: "
        f"{result.nsteps} steps, drift {trajectory.max_energy_drift:.2e}"
    )
    return trajectory
