"""
Linearization of the gauged flow

    dq' = H~_pq dq + H~_pp dp
    dp' = -H~_qq dq - H~_qp dp + Gamma dq'
"""
from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from ..dynamics.vector_fields import gauged_vector_field
from ..geometry.hamiltonian import HamiltonianBlocks, hamiltonian_blocks
from ..geometry.model import MagneticModel


def linearized_field(
    model: MagneticModel,
    q: np.ndarray,
    p: np.ndarray,
    dq: np.ndarray,
    dp: np.ndarray,
    blocks: Optional[HamiltonianBlocks] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Differential of the gauged field at (q, p) applied to (dq, dp)

    ``dq``/``dp`` may be vectors or n x k matrices of column perturbations.
    """
    b = blocks if blocks is not None else hamiltonian_blocks(model, q, p, "H_tilde")
    dq = np.asarray(dq, dtype=float)
    dp = np.asarray(dp, dtype=float)
    dq_dot = b.H_pq @ dq + b.H_pp @ dp
    dp_dot = -b.H_qq @ dq - b.H_qp @ dp + model.gamma @ dq_dot
    return dq_dot, dp_dot


def flow_jacobian(model: MagneticModel, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """2n x 2n matrix of the linearized gauged field in (dq, dp) order"""
    n = model.dim
    eye = np.eye(n)
    zero = np.zeros((n, n))
    b = hamiltonian_blocks(model, q, p, "H_tilde")
    top_q, bottom_q = linearized_field(model, q, p, eye, zero, b)
    top_p, bottom_p = linearized_field(model, q, p, zero, eye, b)
    return np.block([[top_q, top_p], [bottom_q, bottom_p]])


def jacobian_difference_error(model: MagneticModel, q: np.ndarray, p: np.ndarray, step: float = 1e-6) -> float:
    """Largest deviation of flow_jacobian from central differences of the gauged field, scaled by max(1, |DF|)"""
    n = model.dim
    x = np.concatenate([np.asarray(q, dtype=float), np.asarray(p, dtype=float)])

    def field(y: np.ndarray) -> np.ndarray:
        return np.concatenate(gauged_vector_field(model, y[:n], y[n:]))

    shifts = step * np.eye(2 * n)
    numeric = np.column_stack([(field(x + e) - field(x - e)) / (2 * step) for e in shifts])
    analytic = flow_jacobian(model, x[:n], x[n:])
    return float(np.max(np.abs(numeric - analytic)) / max(1.0, np.max(np.abs(analytic))))
