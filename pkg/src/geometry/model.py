"""
Conformal factor, magnetic field and gauge data on the torus
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config.settings import settings
from ..utils.errors import ModelError, NonPositiveConformalFactor
from ..utils.logger import get_logger
from .forms import GaugeData, OneForm, TwoForm, decompose
from .trig_poly import TrigPoly, uniform_grid

logger = get_logger("geometry.model")


@dataclass(frozen=True, eq=False)
class ConformalFactor:
    """lambda(q) > 0 with a certified lower bound; metric ds^2 = |dq|^2 / (2 lambda)"""

    poly: TrigPoly
    lower_bound: float

    @classmethod
    def certify(cls, poly: TrigPoly) -> "ConformalFactor":
        """Certify positivity by oversampled evaluation plus a Lipschitz margin

        Every point of the torus lies within pi*sqrt(n)/N of a node of the
        N^n grid, so min(lambda) >= sampled_min - L*pi*sqrt(n)/N. The grid is
        refined until the bound is positive or the point budget is spent.
        """
        dim = poly.dim
        size = max(8, settings.positivity_oversampling * (2 * poly.max_wavenumber + 1))
        cap = max(2, int(np.floor(settings.positivity_max_points ** (1.0 / dim))))
        size = min(size, cap)
        lipschitz = poly.lipschitz_bound()
        roundoff = settings.positivity_margin_factor * np.finfo(float).eps * max(1.0, poly.coefficient_l1())

        while True:
            sample_min = float(poly(uniform_grid(dim, size)).min())
            bound = sample_min - lipschitz * np.pi * np.sqrt(dim) / size - roundoff
            if bound > 0.0:
                logger.debug(f"conformal factor certified on {size}^{dim} grid: lower bound {bound:.6g}")
                return cls(poly, bound)
            if sample_min <= 0.0 or 2 * size > cap:
                raise NonPositiveConformalFactor(bound, sample_min)
            size *= 2

    @property
    def dim(self) -> int:
        return self.poly.dim

    @property
    def is_constant(self) -> bool:
        return self.poly.is_constant


@dataclass(frozen=True, eq=False)
class MagneticModel:
    """Conformal factor, magnetic 2-form beta and its gauge split beta = d alpha + gamma"""

    conformal: ConformalFactor
    beta: TwoForm
    gauge: GaugeData
    name: str = "model"

    def __post_init__(self):
        if self.dim < 2:
            raise ModelError("the torus dimension must be at least 2")
        if self.beta.dim != self.dim or self.gauge.dim != self.dim:
            raise ModelError("conformal factor, 2-form and gauge data disagree on the dimension")

    @classmethod
    def from_beta(cls, lam: TrigPoly, beta: TwoForm, name: str = "model") -> "MagneticModel":
        return cls(ConformalFactor.certify(lam), beta, decompose(beta), name)

    @classmethod
    def from_gauge(
        cls,
        lam: TrigPoly,
        alpha: OneForm,
        gamma: Optional[np.ndarray] = None,
        name: str = "model",
    ) -> "MagneticModel":
        """Model whose field is given through an explicit potential and harmonic part"""
        gamma = np.zeros((lam.dim, lam.dim)) if gamma is None else np.asarray(gamma, dtype=float)
        gauge = GaugeData(alpha, gamma)
        return cls(ConformalFactor.certify(lam), gauge.two_form(), gauge, name)

    @property
    def dim(self) -> int:
        return self.conformal.dim

    @property
    def lam(self) -> TrigPoly:
        return self.conformal.poly

    @property
    def alpha(self) -> OneForm:
        return self.gauge.alpha

    @property
    def gamma(self) -> np.ndarray:
        return self.gauge.gamma

    @property
    def has_field(self) -> bool:
        return not self.beta.is_zero

    def without_field(self) -> "MagneticModel":
        """Same metric, beta removed (control arm)"""
        dim = self.dim
        return MagneticModel(
            self.conformal,
            TwoForm.zero(dim),
            GaugeData(OneForm.zero(dim), np.zeros((dim, dim))),
            f"{self.name}-control",
        )
