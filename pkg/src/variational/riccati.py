"""
Matrix Riccati equation for Lagrangian graphs dp = A dq along the gauged flow

    A' = -(A + Gamma^T) H~_pp A - (A + Gamma^T) H~_pq - H~_qp A - H~_qq

Graphs are Lagrangian for omega_0 + gamma exactly when A^T - A = Gamma^T;
the equation preserves that condition. On Lagrangian graphs A + Gamma^T =
A^T, which gives the completed square

    tr A' + tr(H~_qq - H~_qp H~_pp^{-1} H~_pq) = -tr(Y^T Y),
    Y = H~_pp^{1/2} A + H~_pp^{-1/2} H~_pq.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..config.settings import settings
from ..dynamics.integrator import FlowIntegrator
from ..dynamics.trajectory import PhasePoint, PointLike, as_phase_point
from ..geometry.hamiltonian import HamiltonianBlocks, hamiltonian_blocks
from ..geometry.model import MagneticModel
from ..geometry.trig_poly import TWO_PI
from ..utils.errors import InvalidInitial
from ..utils.logger import get_logger
from .frames import TangentFrame, propagate_vertical

logger = get_logger("variational.riccati")


def lagrangian_residual(A: np.ndarray, gamma: np.ndarray) -> float:
    """max over the batch of ||A^T - A - Gamma^T|| (Frobenius)"""
    A = np.asarray(A, dtype=float)
    defect = np.swapaxes(A, -1, -2) - A - gamma.T
    return float(np.max(np.linalg.norm(defect, axis=(-2, -1)), initial=0.0))


def riccati_rhs(A: np.ndarray, gamma: np.ndarray, b: HamiltonianBlocks) -> np.ndarray:
    shifted = A + gamma.T
    return -shifted @ b.H_pp @ A - shifted @ b.H_pq - b.H_qp @ A - b.H_qq


def equality_matrix(blocks: HamiltonianBlocks) -> np.ndarray:
    """-H~_pp^{-1} H~_pq, the graph on which the completed square vanishes"""
    return -np.linalg.solve(blocks.H_pp, blocks.H_pq)


def _spd_sqrt(matrix: np.ndarray, power: float) -> np.ndarray:
    values, vectors = np.linalg.eigh(matrix)
    return (vectors * values[..., None, :] ** power) @ np.swapaxes(vectors, -1, -2)


class RiccatiFlow:
    """Right-hand side for the combined state [q, p, vec(A)]"""

    def __init__(self, model: MagneticModel):
        self.model = model
        self.dim = model.dim

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        n = self.dim
        q = np.mod(y[:n], TWO_PI)
        p = y[n:2 * n]
        A = y[2 * n:].reshape(n, n)
        b = hamiltonian_blocks(self.model, q, p, "H_tilde")
        gamma = self.model.gamma
        return np.concatenate([b.H_p, -b.H_q + gamma @ b.H_p, riccati_rhs(A, gamma, b).ravel()])


class BlowUpMonitor:
    """Stops the run when ||A|| is huge and the step has collapsed"""

    def __init__(self, dim: int):
        self.dim = dim
        self.largest_step = 0.0
        self.blowup_time: Optional[float] = None

    def __call__(self, t: float, y: np.ndarray, step: float) -> bool:
        self.largest_step = max(self.largest_step, step)
        A = y[2 * self.dim:]
        if (np.linalg.norm(A) > settings.riccati_blowup_norm
                and step < settings.riccati_collapse_ratio * self.largest_step):
            self.blowup_time = float(t)
            return True
        return False


@dataclass(frozen=True, eq=False)
class RiccatiHistory:
    """Samples of A(t) along the base orbit, truncated at a blow-up"""

    times: np.ndarray
    q_lift: np.ndarray
    p: np.ndarray
    A: np.ndarray
    gamma: np.ndarray = field(repr=False)
    blowup_time: Optional[float] = None

    @property
    def blew_up(self) -> bool:
        return self.blowup_time is not None

    def lagrangian_residuals(self) -> np.ndarray:
        defect = np.swapaxes(self.A, -1, -2) - self.A - self.gamma.T
        return np.linalg.norm(defect, axis=(-2, -1))

    def blocks(self, model: MagneticModel) -> HamiltonianBlocks:
        return hamiltonian_blocks(model, np.mod(self.q_lift, TWO_PI), self.p, "H_tilde")


def propagate_riccati(
    model: MagneticModel,
    A0: np.ndarray,
    x0: PointLike,
    T: float,
    tol: Optional[float] = None,
    *,
    t_eval: Optional[np.ndarray] = None,
    method: Optional[str] = None,
) -> RiccatiHistory:
    """Integrate the Riccati equation from A0 along g~^t, stopping at a blow-up"""
    A0 = np.asarray(A0, dtype=float)
    n = model.dim
    if A0.shape != (n, n):
        raise ValueError(f"A0 must be {n}x{n}, got {A0.shape}")
    residual = lagrangian_residual(A0, model.gamma)
    if residual > settings.lagrangian_tol:
        raise InvalidInitial(residual)

    x0 = as_phase_point(x0)
    monitor = BlowUpMonitor(n)
    integrator = FlowIntegrator(method, tol if tol is not None else settings.integrator_tol)
    y0 = np.concatenate([x0.q, x0.p, A0.ravel()])
    result = integrator.solve(RiccatiFlow(model), (0.0, float(T)), y0, t_eval=t_eval, monitor=monitor)

    states = result.y
    if monitor.blowup_time is not None:
        logger.debug(f"{model.name}: Riccati blow-up at t={monitor.blowup_time:.12g}")
    return RiccatiHistory(
        times=result.t,
        q_lift=states[:, :n],
        p=states[:, n:2 * n],
        A=states[:, 2 * n:].reshape(-1, n, n),
        gamma=model.gamma,
        blowup_time=monitor.blowup_time,
    )


def riccati_from_frame(frame: TangentFrame) -> np.ndarray:
    """A = P J^{-1} at every frame sample"""
    return np.swapaxes(np.linalg.solve(np.swapaxes(frame.J, -1, -2), np.swapaxes(frame.P, -1, -2)), -1, -2)


def project_lagrangian(A: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Nearest matrix with A^T - A = Gamma^T: keep the symmetric part, set the skew part to Gamma / 2"""
    return 0.5 * (A + np.swapaxes(A, -1, -2)) + 0.5 * gamma


def vertical_limit(model: MagneticModel, x0: PointLike, epsilon: float = 1e-2,
                   tol: Optional[float] = None) -> Tuple[np.ndarray, PhasePoint]:
    """Riccati start equivalent to the vertical subspace at x0

    Returns A = P J^{-1} of the vertical frame at time ``epsilon`` together
    with the base point g~^epsilon(x0); blow-up times of the Riccati run from
    there are conjugate times minus ``epsilon``.
    """
    frame = propagate_vertical(model, x0, epsilon, tol, t_eval=np.array([epsilon]))
    A = project_lagrangian(riccati_from_frame(frame)[-1], model.gamma)
    return A, frame.base_point(-1)


def completed_square_defect(model: MagneticModel, history: RiccatiHistory) -> np.ndarray:
    """tr(Y^T Y) at every sample, Y = H~_pp^{1/2} (A - A_eq)"""
    b = history.blocks(model)
    Y = _spd_sqrt(b.H_pp, 0.5) @ (history.A - equality_matrix(b))
    return np.einsum("...ij,...ij->...", Y, Y)


def trace_derivative(model: MagneticModel, history: RiccatiHistory, numerical: bool = False) -> np.ndarray:
    """d(tr A)/dt along the history, from the equation or by finite differences"""
    if numerical:
        return np.gradient(np.trace(history.A, axis1=-2, axis2=-1), history.times, edge_order=2)
    b = history.blocks(model)
    return np.trace(riccati_rhs(history.A, history.gamma, b), axis1=-2, axis2=-1)


def trace_inequality_check(model: MagneticModel, history: RiccatiHistory, numerical: bool = True) -> float:
    """max over samples of d(tr A)/dt + tr(H~_qq - H~_qp H~_pp^{-1} H~_pq)

    d(tr A)/dt is differenced along the history by default, so the check
    measures the integrated solution; with ``numerical=False`` it comes from
    the equation and the value is -tr(Y^T Y) up to round-off.
    """
    b = history.blocks(model)
    potential = np.trace(b.H_qq - b.H_qp @ np.linalg.solve(b.H_pp, b.H_pq), axis1=-2, axis2=-1)
    values = trace_derivative(model, history, numerical) + potential
    return float(np.max(values))
