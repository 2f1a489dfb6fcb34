"""
Tensor quadrature over T^n x S^{n-1}

Torus: trapezoidal rule on the uniform N^n grid, exact for trig polynomials
of max wavenumber < N. Sphere: antipodally symmetric node sets, built as a
half set plus its exact negation, so integrands odd in the direction cancel
pair by pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.special import gamma as gamma_function

from ..config.settings import settings
from ..geometry.model import MagneticModel
from ..geometry.trig_poly import TWO_PI, uniform_grid
from ..utils.errors import QuadratureError

SUPPORTED_DIMENSIONS = (2, 3, 4)


def sphere_volume(dim: int) -> float:
    """Vol(S^{dim-1}) = 2 pi^{dim/2} / Gamma(dim/2)"""
    return float(2.0 * np.pi ** (dim / 2.0) / gamma_function(dim / 2.0))


def _antipodal(half_nodes: np.ndarray, half_weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return np.concatenate([half_nodes, -half_nodes]), np.concatenate([half_weights, half_weights])


def _gauss_legendre(count: int, lower: float, upper: float) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(count)
    half_width = 0.5 * (upper - lower)
    return lower + half_width * (x + 1.0), half_width * w


def _circle(points: int) -> Tuple[np.ndarray, np.ndarray]:
    if points < 2 or points % 2:
        raise QuadratureError(f"circle rule needs an even number of points, got {points}")
    angles = TWO_PI * np.arange(points // 2) / points
    nodes = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    return _antipodal(nodes, np.full(points // 2, TWO_PI / points))


def _sphere2(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre in cos(theta) times uniform phi, exact to degree ``order``"""
    z, wz = _gauss_legendre((order + 2) // 2, -1.0, 1.0)
    n_phi = order + 2 + (order % 2)
    phi = TWO_PI * np.arange(n_phi // 2) / n_phi
    Z, PHI = np.meshgrid(z, phi, indexing="ij")
    R = np.sqrt(1.0 - Z ** 2)
    nodes = np.stack([R * np.cos(PHI), R * np.sin(PHI), Z], axis=-1).reshape(-1, 3)
    weights = np.repeat(wz * TWO_PI / n_phi, len(phi))
    return _antipodal(nodes, weights)


def _sphere3(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Hopf coordinates, s = sin^2(eta) Gauss-Legendre on [0, 1], measure ds dxi1 dxi2 / 2"""
    s, ws = _gauss_legendre(order // 4 + 1, 0.0, 1.0)
    n_xi = order + 2 + (order % 2)
    xi_half = TWO_PI * np.arange(n_xi // 2) / n_xi
    xi_full = TWO_PI * np.arange(n_xi) / n_xi
    S, X1, X2 = np.meshgrid(s, xi_half, xi_full, indexing="ij")
    c, r = np.sqrt(1.0 - S), np.sqrt(S)
    nodes = np.stack([c * np.cos(X1), c * np.sin(X1), r * np.cos(X2), r * np.sin(X2)], axis=-1).reshape(-1, 4)
    weights = (0.5 * ws[:, None, None] * (TWO_PI / n_xi) ** 2 * np.ones(S.shape)).ravel()
    return _antipodal(nodes, weights)


def sphere_rule(dim: int, order: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes (M, dim) and weights (M,) on S^{dim-1}; weights sum to its volume

    For dim = 2 ``order`` is the number of points (default sphere_points_2d).
    """
    if dim not in SUPPORTED_DIMENSIONS:
        raise QuadratureError(f"quadrature supports 2 <= n <= 4, got n={dim}")
    if dim == 2:
        return _circle(order or settings.sphere_points_2d)
    order = order or settings.sphere_order
    if order < 2:
        raise QuadratureError(f"sphere order must be at least 2, got {order}")
    return _sphere2(order) if dim == 3 else _sphere3(order)


def default_grid_size(model: MagneticModel) -> int:
    wavenumber = max(model.lam.max_wavenumber, model.alpha.max_wavenumber)
    return max(4 * wavenumber + 4, settings.quadrature_min_grid)


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Uniform N^n torus grid times an antipodal sphere rule"""

    dim: int
    size: int
    sphere_order: int
    torus_nodes: np.ndarray = field(repr=False)
    sphere_nodes: np.ndarray = field(repr=False)
    sphere_weights: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, dim: int, size: int, sphere_order: Optional[int] = None) -> "QuadratureGrid":
        if dim not in SUPPORTED_DIMENSIONS:
            raise QuadratureError(f"quadrature supports 2 <= n <= 4, got n={dim}")
        if size < 2:
            raise QuadratureError(f"torus grid needs at least 2 points per axis, got {size}")
        if sphere_order is None:
            sphere_order = settings.sphere_points_2d if dim == 2 else settings.sphere_order
        nodes, weights = sphere_rule(dim, sphere_order)
        return cls(dim, size, sphere_order, uniform_grid(dim, size), nodes, weights)

    @classmethod
    def for_model(cls, model: MagneticModel, size: Optional[int] = None,
                  sphere_order: Optional[int] = None) -> "QuadratureGrid":
        return cls.build(model.dim, size or default_grid_size(model), sphere_order)

    @property
    def torus_weight(self) -> float:
        return (TWO_PI / self.size) ** self.dim

    @property
    def num_points(self) -> int:
        return len(self.torus_nodes) * len(self.sphere_nodes)

    def refined(self) -> "QuadratureGrid":
        return QuadratureGrid.build(self.dim, 2 * self.size, self.sphere_order)

    def describe(self) -> dict:
        return {
            "dimension": self.dim,
            "torus_size": self.size,
            "sphere_order": self.sphere_order,
            "sphere_points": len(self.sphere_nodes),
            "points": self.num_points,
        }

    def chunks(self, chunk: Optional[int] = None):
        """Torus nodes in fixed-order slabs"""
        chunk = chunk or settings.quadrature_chunk
        for start in range(0, len(self.torus_nodes), chunk):
            yield self.torus_nodes[start:start + chunk]
