"""
Tangent frames (J; P) pushed forward by the linearized gauged flow
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..config.settings import settings
from ..dynamics.integrator import DenseSolution, FlowIntegrator
from ..dynamics.trajectory import PhasePoint, PointLike, as_phase_point, integrate
from ..geometry.hamiltonian import hamiltonian_blocks
from ..geometry.model import MagneticModel
from ..geometry.trig_poly import TWO_PI
from ..utils.logger import get_logger

logger = get_logger("variational.frames")


class FrameFlow:
    """Right-hand side for the combined state [q, p, vec(J), vec(P)]"""

    def __init__(self, model: MagneticModel):
        self.model = model
        self.dim = model.dim

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        n = self.dim
        q = np.mod(y[:n], TWO_PI)
        p = y[n:2 * n]
        J = y[2 * n:2 * n + n * n].reshape(n, n)
        P = y[2 * n + n * n:].reshape(n, n)
        b = hamiltonian_blocks(self.model, q, p, "H_tilde")
        gamma = self.model.gamma
        q_dot = b.H_p
        p_dot = -b.H_q + gamma @ q_dot
        J_dot = b.H_pq @ J + b.H_pp @ P
        P_dot = -b.H_qq @ J - b.H_qp @ P + gamma @ J_dot
        return np.concatenate([q_dot, p_dot, J_dot.ravel(), P_dot.ravel()])


def unpack_frame(y: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Split combined states (..., 2n + 2n^2) into q, p, J, P"""
    y = np.asarray(y)
    lead = y.shape[:-1]
    q = y[..., :n]
    p = y[..., n:2 * n]
    J = y[..., 2 * n:2 * n + n * n].reshape(lead + (n, n))
    P = y[..., 2 * n + n * n:].reshape(lead + (n, n))
    return q, p, J, P


def orthonormal_sigma_min(J: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Smallest singular value of the dq block of the column-orthonormalized frame

    Scale free: it is the sine of the smallest principal angle between the
    frame and the vertical subspace, and vanishes exactly when det J does.
    """
    stacked = np.concatenate([J, P], axis=-2)
    Q, _ = np.linalg.qr(stacked)
    n = J.shape[-1]
    return np.linalg.svd(Q[..., :n, :], compute_uv=False)[..., -1]


@dataclass(frozen=True, eq=False)
class TangentFrame:
    """Frame history along a base orbit; J(0), P(0) the initial subspace"""

    times: np.ndarray
    q_lift: np.ndarray
    p: np.ndarray
    J: np.ndarray
    P: np.ndarray
    dense: Optional[DenseSolution] = None

    @property
    def dim(self) -> int:
        return self.J.shape[-1]

    @property
    def det_J(self) -> np.ndarray:
        return np.linalg.det(self.J)

    @property
    def sigma_min(self) -> np.ndarray:
        return orthonormal_sigma_min(self.J, self.P)

    def base_point(self, index: int) -> PhasePoint:
        return PhasePoint(self.q_lift[index], self.p[index])

    def at(self, t) -> Tuple[np.ndarray, np.ndarray]:
        """(J, P) at arbitrary times from the dense output"""
        if self.dense is None:
            raise ValueError("frame was propagated without dense output")
        _, _, J, P = unpack_frame(self.dense(t), self.dim)
        return J, P


def propagate_vertical(
    model: MagneticModel,
    x0: PointLike,
    T: float,
    tol: Optional[float] = None,
    *,
    t_eval: Optional[np.ndarray] = None,
    dense: bool = False,
    initial: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    method: Optional[str] = None,
) -> TangentFrame:
    """Push the vertical frame J = 0, P = I (or ``initial``) forward along g~^t"""
    x0 = as_phase_point(x0)
    n = model.dim
    J0, P0 = initial if initial is not None else (np.zeros((n, n)), np.eye(n))
    y0 = np.concatenate([x0.q, x0.p, np.asarray(J0, dtype=float).ravel(), np.asarray(P0, dtype=float).ravel()])
    integrator = FlowIntegrator(method, tol if tol is not None else settings.integrator_tol)
    result = integrator.solve(FrameFlow(model), (0.0, float(T)), y0, t_eval=t_eval, dense=dense)
    q, p, J, P = unpack_frame(result.y, n)
    logger.debug(f"vertical frame on {model.name} to T={T:g}: {result.nsteps} steps")
    return TangentFrame(result.t, q, p, J, P, result.dense)


def finite_difference_frame(
    model: MagneticModel,
    x0: PointLike,
    T: float,
    step: float = 1e-6,
    tol: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Central differences of the time-T gauged flow map in p0; columns match (J, P) of the vertical frame"""
    x0 = as_phase_point(x0)
    n = model.dim
    J = np.zeros((n, n))
    P = np.zeros((n, n))
    for i in range(n):
        shift = step * np.eye(n)[i]
        plus = integrate(model, PhasePoint(x0.q, x0.p + shift), T, tol, t_eval=np.array([T]))
        minus = integrate(model, PhasePoint(x0.q, x0.p - shift), T, tol, t_eval=np.array([T]))
        J[:, i] = (plus.q_lift[-1] - minus.q_lift[-1]) / (2 * step)
        P[:, i] = (plus.p[-1] - minus.p[-1]) / (2 * step)
    return J, P
