"""
Twisted and gauged Hamiltonian vector fields on T^n x R^n

Sign convention (locked by tests): p_dot = -H_q + beta(q) q_dot, beta the
skew matrix with beta_ij the coefficient of dq_i ^ dq_j, i < j. For B > 0 on
T^2 the velocity turns clockwise. The gauged field uses H~ and the constant
matrix Gamma in place of beta(q).
"""
from __future__ import annotations

from typing import Tuple, Union

import numpy as np

from ..geometry.hamiltonian import Formulation, as_formulation
from ..geometry.model import MagneticModel
from ..geometry.trig_poly import TWO_PI

VectorField = Tuple[np.ndarray, np.ndarray]


def _gradients(model: MagneticModel, q: np.ndarray, p: np.ndarray, gauged: bool) -> VectorField:
    """(H_p, H_q) without building second-derivative blocks"""
    lam = model.lam
    u = p - model.alpha(q) if gauged and not model.alpha.is_zero else p
    H_p = lam(q)[..., None] * u
    H_q = 0.5 * np.sum(u * u, axis=-1)[..., None] * lam.gradient(q)
    if gauged and not model.alpha.is_zero:
        H_q = H_q - np.einsum("...ji,...j->...i", model.alpha.jacobian(q), H_p)
    return H_p, H_q


def twisted_vector_field(model: MagneticModel, q: np.ndarray, p: np.ndarray) -> VectorField:
    """q_dot = H_p, p_dot = -H_q + beta(q) q_dot"""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    q_dot, H_q = _gradients(model, q, p, gauged=False)
    p_dot = -H_q
    if model.has_field:
        p_dot = p_dot + np.einsum("...ij,...j->...i", model.beta.matrix(q), q_dot)
    return q_dot, p_dot


def gauged_vector_field(model: MagneticModel, q: np.ndarray, p: np.ndarray) -> VectorField:
    """q_dot = H~_p, p_dot = -H~_q + Gamma q_dot"""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    q_dot, H_q = _gradients(model, q, p, gauged=True)
    p_dot = -H_q + q_dot @ model.gamma.T
    return q_dot, p_dot


def vector_field(model: MagneticModel, q: np.ndarray, p: np.ndarray,
                 formulation: Union[str, Formulation] = Formulation.GAUGED) -> VectorField:
    if as_formulation(formulation) is Formulation.TWISTED:
        return twisted_vector_field(model, q, p)
    return gauged_vector_field(model, q, p)


class PhaseFlow:
    """Flat-state right-hand side y = (q, p) for the ODE solvers

    ``direction = -1`` gives the time-reversed field, whose forward flow is
    g^{-t}. Positions are wrapped into [0, 2pi)^n before evaluation.
    """

    def __init__(self, model: MagneticModel, formulation: Union[str, Formulation] = Formulation.GAUGED,
                 direction: int = 1):
        if direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")
        self.model = model
        self.formulation = as_formulation(formulation)
        self.direction = direction
        self.dim = model.dim

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        n = self.dim
        q = np.mod(y[:n], TWO_PI)
        q_dot, p_dot = vector_field(self.model, q, y[n:2 * n], self.formulation)
        return self.direction * np.concatenate([q_dot, p_dot])


def energy_rate(model: MagneticModel, q: np.ndarray, p: np.ndarray,
                formulation: Union[str, Formulation] = Formulation.TWISTED) -> np.ndarray:
    """dH/dt along the field; the twist terms do no work"""
    which = as_formulation(formulation)
    H_p, H_q = _gradients(model, np.asarray(q, dtype=float), np.asarray(p, dtype=float),
                          gauged=which is Formulation.GAUGED)
    q_dot, p_dot = vector_field(model, q, p, which)
    return np.sum(H_q * q_dot, axis=-1) + np.sum(H_p * p_dot, axis=-1)
