"""
Analytic derivatives of H(p, q) = lambda(q) |p|^2 / 2 and of the gauged
Hamiltonian H~(p, q) = H(p - alpha(q), q)

Block naming: H_pq[i, j] = d^2 H / dp_i dq_j, H_qp = H_pq^T.
All functions accept arbitrary leading batch shapes on q and p.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from .model import MagneticModel


class Formulation(str, Enum):
    """Which Hamiltonian / symplectic picture is meant"""
    TWISTED = "twisted"   # H with omega_0 + pi^* beta
    GAUGED = "gauged"     # H~ with omega_0 + gamma


def as_formulation(which: Union[str, Formulation]) -> Formulation:
    if isinstance(which, Formulation):
        return which
    aliases = {"h": Formulation.TWISTED, "twisted": Formulation.TWISTED,
               "h_tilde": Formulation.GAUGED, "htilde": Formulation.GAUGED, "gauged": Formulation.GAUGED}
    try:
        return aliases[str(which).lower()]
    except KeyError:
        raise ValueError(f"unknown Hamiltonian '{which}', expected H or H_tilde") from None


@dataclass(frozen=True)
class FieldSample:
    """lambda, alpha and their derivatives at a batch of torus points"""
    lam: np.ndarray
    grad_lam: np.ndarray
    hess_lam: np.ndarray
    alpha: np.ndarray
    d_alpha: np.ndarray      # [..., i, j] = d alpha_i / d q_j
    d2_alpha: np.ndarray     # [..., k, i, j] = d^2 alpha_k / d q_i d q_j


def sample_fields(model: MagneticModel, q: np.ndarray) -> FieldSample:
    q = np.asarray(q, dtype=float)
    lam = model.lam
    n = model.dim
    batch = q.shape[:-1]
    if model.alpha.is_zero:
        alpha = np.zeros(batch + (n,))
        d_alpha = np.zeros(batch + (n, n))
        d2_alpha = np.zeros(batch + (n, n, n))
    else:
        alpha = model.alpha(q)
        d_alpha = model.alpha.jacobian(q)
        d2_alpha = model.alpha.second_derivatives(q)
    return FieldSample(lam(q), lam.gradient(q), lam.hessian(q), alpha, d_alpha, d2_alpha)


@dataclass(frozen=True)
class HamiltonianBlocks:
    value: np.ndarray
    H_p: np.ndarray
    H_q: np.ndarray
    H_pp: np.ndarray
    H_pq: np.ndarray
    H_qp: np.ndarray
    H_qq: np.ndarray


def _transpose(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2)


def kinetic_momentum(model: MagneticModel, q: np.ndarray, p: np.ndarray, which="H_tilde") -> np.ndarray:
    """p - alpha(q) in the gauged picture, p itself in the twisted one"""
    if as_formulation(which) is Formulation.GAUGED and not model.alpha.is_zero:
        return np.asarray(p, dtype=float) - model.alpha(q)
    return np.asarray(p, dtype=float)


def hamiltonian_value(model: MagneticModel, q: np.ndarray, p: np.ndarray, which="H_tilde") -> np.ndarray:
    u = kinetic_momentum(model, q, p, which)
    return 0.5 * model.lam(q) * np.sum(u * u, axis=-1)


def hamiltonian_blocks(
    model: MagneticModel,
    q: np.ndarray,
    p: np.ndarray,
    which: Union[str, Formulation] = "H",
    fields: Optional[FieldSample] = None,
) -> HamiltonianBlocks:
    """Value, gradients and second-derivative blocks of H or H~"""
    formulation = as_formulation(which)
    p = np.asarray(p, dtype=float)
    f = fields if fields is not None else sample_fields(model, q)
    n = model.dim
    gauged = formulation is Formulation.GAUGED

    u = p - f.alpha if gauged else p
    batch = np.broadcast_shapes(f.lam.shape, u.shape[:-1])
    u = np.broadcast_to(u, batch + (n,))
    lam = np.broadcast_to(f.lam, batch)
    grad = np.broadcast_to(f.grad_lam, batch + (n,))
    u2 = np.sum(u * u, axis=-1)

    value = 0.5 * lam * u2
    H_p = lam[..., None] * u
    H_q = 0.5 * u2[..., None] * grad
    H_pp = lam[..., None, None] * np.eye(n)
    H_pq = u[..., :, None] * grad[..., None, :]
    H_qq = 0.5 * u2[..., None, None] * np.broadcast_to(f.hess_lam, batch + (n, n))

    if gauged:
        D = np.broadcast_to(f.d_alpha, batch + (n, n))
        Dt = _transpose(D)
        M = np.einsum("...k,...kij->...ij", H_p, np.broadcast_to(f.d2_alpha, batch + (n, n, n)))
        H_q = H_q - np.einsum("...ji,...j->...i", D, H_p)
        H_qq = Dt @ H_pp @ D - _transpose(H_pq) @ D - Dt @ H_pq + H_qq - M
        H_pq = H_pq - H_pp @ D

    return HamiltonianBlocks(value, H_p, H_q, H_pp, H_pq, _transpose(H_pq), H_qq)


def trace_integrand(blocks: HamiltonianBlocks) -> np.ndarray:
    """tr(H_qq - H_qp H_pp^{-1} H_pq), the sigma integrand"""
    correction = blocks.H_qp @ np.linalg.solve(blocks.H_pp, blocks.H_pq)
    return np.trace(blocks.H_qq - correction, axis1=-2, axis2=-1)


def gauge_map(model: MagneticModel, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Twisted momentum -> gauged momentum, (q, p) -> (q, p + alpha(q))"""
    return np.asarray(p, dtype=float) + model.alpha(q)


def inverse_gauge_map(model: MagneticModel, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.asarray(p, dtype=float) - model.alpha(q)


def _gradients(model: MagneticModel, q: np.ndarray, p: np.ndarray, which) -> np.ndarray:
    b = hamiltonian_blocks(model, q, p, which)
    return np.concatenate([b.H_q, b.H_p])


def finite_difference_error(model: MagneticModel, q: np.ndarray, p: np.ndarray, which="H_tilde",
                            step: float = 1e-5) -> float:
    """Largest relative deviation of the analytic blocks from central differences

    First derivatives are differenced from values, second-derivative blocks
    from the analytic gradients. Errors are scaled by max(1, |block|).
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    n = model.dim
    b = hamiltonian_blocks(model, q, p, which)
    analytic_grad = np.concatenate([b.H_q, b.H_p])
    analytic_hess = np.block([[b.H_qq, b.H_qp], [b.H_pq, b.H_pp]])

    x = np.concatenate([q, p])
    fd_grad = np.zeros(2 * n)
    fd_hess = np.zeros((2 * n, 2 * n))
    for i in range(2 * n):
        shift = np.zeros(2 * n)
        shift[i] = step
        plus, minus = x + shift, x - shift
        fd_grad[i] = (hamiltonian_value(model, plus[:n], plus[n:], which)
                      - hamiltonian_value(model, minus[:n], minus[n:], which)) / (2 * step)
        fd_hess[:, i] = (_gradients(model, plus[:n], plus[n:], which)
                         - _gradients(model, minus[:n], minus[n:], which)) / (2 * step)

    grad_error = np.max(np.abs(fd_grad - analytic_grad)) / max(1.0, np.max(np.abs(analytic_grad)))
    hess_error = np.max(np.abs(fd_hess - analytic_hess)) / max(1.0, np.max(np.abs(analytic_hess)))
    return float(max(grad_error, hess_error))
