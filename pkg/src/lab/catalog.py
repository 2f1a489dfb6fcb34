"""
Reference models used by the validation suite and mirrored in data/models/
"""
from __future__ import annotations

from typing import Dict

import numpy as np

from ..geometry.forms import OneForm, TwoForm
from ..geometry.model import MagneticModel
from ..geometry.trig_poly import TrigPoly


def _unit(dim: int) -> TrigPoly:
    return TrigPoly.constant(dim, 1.0)


def _cosine_factor(dim: int, epsilon: float, axis: int = 0) -> TrigPoly:
    k = [0] * dim
    k[axis] = 1
    return TrigPoly.from_modes(dim, [((0,) * dim, 1.0, 0.0), (tuple(k), epsilon, 0.0)])


def flat_free(dim: int = 2) -> MagneticModel:
    return MagneticModel.from_beta(_unit(dim), TwoForm.zero(dim), "flat-free")


def constant_field(strength: float = 1.0) -> MagneticModel:
    """lambda = 1, beta = B dq1 ^ dq2 on T^2"""
    return MagneticModel.from_beta(_unit(2), TwoForm(2, {(0, 1): TrigPoly.constant(2, strength)}),
                                   f"flat-constant-b{strength:g}")


def flat_exact() -> MagneticModel:
    """lambda = 1, beta = cos(q1) dq1 ^ dq2"""
    beta = TwoForm(2, {(0, 1): TrigPoly.from_modes(2, [((1, 0), 1.0, 0.0)])})
    return MagneticModel.from_beta(_unit(2), beta, "flat-exact")


def mixed(epsilon: float = 0.2, strength: float = 0.5) -> MagneticModel:
    """lambda = 1 + eps cos(q1), beta = B dq1 ^ dq2"""
    beta = TwoForm(2, {(0, 1): TrigPoly.constant(2, strength)})
    return MagneticModel.from_beta(_cosine_factor(2, epsilon), beta, "mixed")


def conformal_potential(dim: int = 3, epsilon: float = 0.3, amplitude: float = 0.2) -> MagneticModel:
    """lambda = 1 + eps cos(q1), alpha = amplitude sin(q2) dq1"""
    k = [0] * dim
    k[1] = 1
    components = [TrigPoly.from_modes(dim, [(tuple(k), 0.0, amplitude)])]
    components += [TrigPoly.zero(dim) for _ in range(dim - 1)]
    return MagneticModel.from_gauge(_cosine_factor(dim, epsilon), OneForm(tuple(components)),
                                    name=f"conformal-n{dim}")


def conformal_family(epsilon: float, dim: int = 3) -> MagneticModel:
    """lambda = 1 + eps cos(q1) without field"""
    return MagneticModel.from_beta(_cosine_factor(dim, epsilon), TwoForm.zero(dim),
                                   f"conformal-n{dim}-eps{epsilon:g}")


def flat_potential() -> MagneticModel:
    """lambda = 1, alpha = sin(q1) dq2"""
    alpha = OneForm((TrigPoly.zero(2), TrigPoly.from_modes(2, [((1, 0), 0.0, 1.0)])))
    return MagneticModel.from_gauge(_unit(2), alpha, name="flat-potential")


def gauge_suite() -> Dict[str, MagneticModel]:
    """Models mixing nonconstant lambda (n = 2, 3) with nonzero alpha"""
    lam2 = TrigPoly.from_modes(2, [((0, 0), 1.0, 0.0), ((1, 0), 0.3, 0.0), ((1, 1), 0.0, 0.1)])
    alpha2 = OneForm((TrigPoly.from_modes(2, [((0, 1), 0.4, 0.0)]),
                      TrigPoly.from_modes(2, [((1, 0), 0.0, 0.25), ((1, -1), 0.1, 0.0)])))
    lam3 = TrigPoly.from_modes(3, [((0, 0, 0), 1.0, 0.0), ((0, 1, 0), 0.2, 0.0), ((1, 0, 1), 0.0, 0.1)])
    alpha3 = OneForm((TrigPoly.zero(3),
                      TrigPoly.from_modes(3, [((0, 0, 1), 0.3, 0.0)]),
                      TrigPoly.from_modes(3, [((1, 0, 0), 0.0, 0.2)])))
    models = [
        flat_potential(),
        conformal_potential(2),
        conformal_potential(3),
        MagneticModel.from_gauge(lam2, alpha2, np.array([[0.0, 0.5], [-0.5, 0.0]]), "suite-n2"),
        MagneticModel.from_gauge(lam3, alpha3, name="suite-n3"),
    ]
    return {model.name: model for model in models}
