"""
Differential forms with trigonometric-polynomial coefficients

Conventions: a 2-form is stored by its components beta_ij (i < j), the
coefficient of dq_i ^ dq_j, and extended skew-symmetrically. The exterior
derivative of a 1-form is (d alpha)_ij = d_i alpha_j - d_j alpha_i.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config.settings import settings
from ..utils.errors import ModelError, NotClosed
from ..utils.logger import get_logger
from .trig_poly import TrigPoly, uniform_grid

logger = get_logger("geometry.forms")


@dataclass(frozen=True, eq=False)
class OneForm:
    """alpha = sum_i alpha_i dq_i"""

    components: Tuple[TrigPoly, ...]

    @classmethod
    def zero(cls, dim: int) -> "OneForm":
        return cls(tuple(TrigPoly.zero(dim) for _ in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def is_zero(self) -> bool:
        return all(c.num_modes == 0 for c in self.components)

    @property
    def max_wavenumber(self) -> int:
        return max((c.max_wavenumber for c in self.components), default=0)

    def __call__(self, q: np.ndarray) -> np.ndarray:
        return np.stack([c(q) for c in self.components], axis=-1)

    def jacobian(self, q: np.ndarray) -> np.ndarray:
        """D alpha with entries [i, j] = d alpha_i / d q_j"""
        return np.stack([c.gradient(q) for c in self.components], axis=-2)

    def second_derivatives(self, q: np.ndarray) -> np.ndarray:
        """Entries [k, i, j] = d^2 alpha_k / d q_i d q_j"""
        return np.stack([c.hessian(q) for c in self.components], axis=-3)

    def divergence(self) -> TrigPoly:
        total = TrigPoly.zero(self.dim)
        for axis, component in enumerate(self.components):
            total = total + component.derivative(axis)
        return total

    def exterior_derivative(self) -> "TwoForm":
        pieces = {}
        for i, j in combinations(range(self.dim), 2):
            pieces[(i, j)] = (
                self.components[j].derivative(i) - self.components[i].derivative(j)
            )
        return TwoForm(self.dim, pieces)


@dataclass(frozen=True, eq=False)
class TwoForm:
    """beta = sum_{i<j} beta_ij dq_i ^ dq_j (0-based indices)"""

    dim: int
    pieces: Dict[Tuple[int, int], TrigPoly] = field(default_factory=dict)

    def __post_init__(self):
        for (i, j), poly in self.pieces.items():
            if not 0 <= i < j < self.dim:
                raise ModelError(f"2-form component ({i + 1},{j + 1}) must satisfy i < j <= n")
            if poly.dim != self.dim:
                raise ModelError("2-form component has the wrong dimension")

    @classmethod
    def zero(cls, dim: int) -> "TwoForm":
        return cls(dim, {})

    @classmethod
    def constant(cls, matrix: np.ndarray) -> "TwoForm":
        matrix = np.asarray(matrix, dtype=float)
        dim = matrix.shape[0]
        return cls(dim, {
            (i, j): TrigPoly.constant(dim, float(matrix[i, j]))
            for i, j in combinations(range(dim), 2)
            if matrix[i, j] != 0.0
        })

    def component(self, i: int, j: int) -> TrigPoly:
        if i == j:
            return TrigPoly.zero(self.dim)
        if i < j:
            return self.pieces.get((i, j), TrigPoly.zero(self.dim))
        return -self.pieces.get((j, i), TrigPoly.zero(self.dim))

    @property
    def is_zero(self) -> bool:
        return all(p.num_modes == 0 for p in self.pieces.values())

    @property
    def max_wavenumber(self) -> int:
        return max((p.max_wavenumber for p in self.pieces.values()), default=0)

    def __add__(self, other: "TwoForm") -> "TwoForm":
        keys = set(self.pieces) | set(other.pieces)
        return TwoForm(self.dim, {key: self.component(*key) + other.component(*key) for key in keys})

    def __sub__(self, other: "TwoForm") -> "TwoForm":
        keys = set(self.pieces) | set(other.pieces)
        return TwoForm(self.dim, {key: self.component(*key) - other.component(*key) for key in keys})

    def mean_matrix(self) -> np.ndarray:
        """Harmonic part: the k = 0 Fourier mode of every component, as a skew matrix"""
        gamma = np.zeros((self.dim, self.dim))
        for (i, j), poly in self.pieces.items():
            gamma[i, j] = poly.mean
            gamma[j, i] = -poly.mean
        return gamma

    def matrix(self, q: np.ndarray) -> np.ndarray:
        """Skew matrix field beta(q), shape (..., n, n)"""
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape[:-1] + (self.dim, self.dim))
        for (i, j), poly in self.pieces.items():
            values = poly(q)
            out[..., i, j] = values
            out[..., j, i] = -values
        return out

    def exterior_derivative_components(self) -> List[TrigPoly]:
        """(d beta)_ijk = d_i beta_jk + d_j beta_ki + d_k beta_ij for i < j < k"""
        return [
            self.component(j, k).derivative(i)
            + self.component(k, i).derivative(j)
            + self.component(i, j).derivative(k)
            for i, j, k in combinations(range(self.dim), 3)
        ]


@dataclass(frozen=True, eq=False)
class GaugeData:
    """beta = d alpha + gamma with gamma constant (matrix Gamma)"""

    alpha: OneForm
    gamma: np.ndarray

    def __post_init__(self):
        gamma = np.array(self.gamma, dtype=float)
        if gamma.shape != (self.alpha.dim, self.alpha.dim):
            raise ModelError("Gamma must be an n x n matrix")
        if not np.allclose(gamma, -gamma.T, rtol=0.0, atol=1e-14):
            raise ModelError("Gamma must be skew-symmetric")
        gamma.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)

    @property
    def dim(self) -> int:
        return self.alpha.dim

    def two_form(self) -> TwoForm:
        return self.alpha.exterior_derivative() + TwoForm.constant(self.gamma)

    def reconstruction_residual(self, beta: TwoForm, grid_size: Optional[int] = None) -> float:
        """max over a grid of |d alpha + gamma - beta|"""
        difference = self.two_form() - beta
        size = grid_size or default_grid_size(difference.max_wavenumber)
        points = uniform_grid(self.dim, size)
        return float(np.abs(difference.matrix(points)).max(initial=0.0))


def default_grid_size(max_wavenumber: int) -> int:
    return 2 * max_wavenumber + 2


def check_closed(beta: TwoForm, grid_size: Optional[int] = None) -> float:
    """Maximum of |(d beta)_ijk| over a uniform grid; 0 up to round-off iff closed"""
    components = beta.exterior_derivative_components()
    if not components:
        return 0.0
    minimum = 2 * beta.max_wavenumber + 1
    size = grid_size if grid_size is not None else default_grid_size(beta.max_wavenumber)
    if size < minimum:
        raise ValueError(f"grid_size {size} cannot resolve wavenumber {beta.max_wavenumber} (need >= {minimum})")
    points = uniform_grid(beta.dim, size)
    return float(max(np.abs(c(points)).max(initial=0.0) for c in components))


def decompose(beta: TwoForm, tolerance: Optional[float] = None) -> GaugeData:
    """Split a closed 2-form into d alpha + gamma with a divergence-free alpha

    Gamma is the mean of each component. Mode by mode, with k . alpha_k = 0,
    alpha_j = sum_m d_m Laplace^{-1} beta_mj solves d alpha = beta - gamma.
    """
    tolerance = settings.closedness_tol if tolerance is None else tolerance
    residual = check_closed(beta)
    if residual > tolerance:
        raise NotClosed(residual, tolerance)

    dim = beta.dim
    gamma = beta.mean_matrix()
    potentials = [beta.component(m, j).inverse_laplacian() for m in range(dim) for j in range(dim)]
    alpha_components = []
    for j in range(dim):
        alpha_j = TrigPoly.zero(dim)
        for m in range(dim):
            alpha_j = alpha_j + potentials[m * dim + j].derivative(m)
        alpha_components.append(alpha_j)

    gauge = GaugeData(OneForm(tuple(alpha_components)), gamma)
    mismatch = gauge.reconstruction_residual(beta)
    if mismatch > settings.gauge_tol:
        raise ModelError(f"gauge reconstruction residual {mismatch:.3e} exceeds {settings.gauge_tol:.1e}")
    logger.debug(f"decomposed 2-form on T^{dim}: residual {residual:.2e}, reconstruction {mismatch:.2e}")
    return gauge
