"""
Real trigonometric polynomials on the torus R^n / (2*pi*Z)^n

A ``TrigPoly`` stores finitely many modes ``a_k cos(k.q) + b_k sin(k.q)``
with one canonical wavevector per ``+-k`` pair (first nonzero component
positive). Derivatives, Laplacian and the inverse Laplacian act mode by mode
and are exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

Mode = Tuple[Tuple[int, ...], float, float]

TWO_PI = 2.0 * np.pi


def _canonical(k: Sequence[int]) -> Tuple[Tuple[int, ...], int]:
    """Return the canonical representative of +-k and the sign flip applied"""
    for component in k:
        if component > 0:
            return tuple(int(c) for c in k), 1
        if component < 0:
            return tuple(-int(c) for c in k), -1
    return tuple(int(c) for c in k), 1


def uniform_grid(dim: int, size: int) -> np.ndarray:
    """Tensor grid of ``size**dim`` points on [0, 2pi)^dim, shape (size**dim, dim)"""
    axis = TWO_PI * np.arange(size) / size
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True, eq=False)
class TrigPoly:
    """Finite Fourier series on T^n"""

    dim: int
    wavevectors: np.ndarray = field(repr=False)
    cos_coeffs: np.ndarray = field(repr=False)
    sin_coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("wavevectors", "cos_coeffs", "sin_coeffs"):
            getattr(self, name).setflags(write=False)

    # Construction

    @classmethod
    def from_modes(cls, dim: int, modes: Iterable[Mode]) -> "TrigPoly":
        """Build from (k, a_k, b_k) triples, merging +-k pairs and dropping zeros"""
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        merged = {}
        for k, a, b in modes:
            if len(k) != dim:
                raise ValueError(f"wavevector {tuple(k)} does not have dimension {dim}")
            key, sign = _canonical(k)
            if not any(key):
                b = 0.0
            cos_sum, sin_sum = merged.get(key, (0.0, 0.0))
            merged[key] = (cos_sum + float(a), sin_sum + sign * float(b))

        kept = sorted(
            (key, a, b) for key, (a, b) in merged.items() if a != 0.0 or b != 0.0
        )
        if kept:
            wavevectors = np.array([m[0] for m in kept], dtype=np.int64)
            cos_coeffs = np.array([m[1] for m in kept], dtype=float)
            sin_coeffs = np.array([m[2] for m in kept], dtype=float)
        else:
            wavevectors = np.zeros((0, dim), dtype=np.int64)
            cos_coeffs = np.zeros(0)
            sin_coeffs = np.zeros(0)
        return cls(dim, wavevectors, cos_coeffs, sin_coeffs)

    @classmethod
    def constant(cls, dim: int, value: float) -> "TrigPoly":
        return cls.from_modes(dim, [((0,) * dim, value, 0.0)])

    @classmethod
    def zero(cls, dim: int) -> "TrigPoly":
        return cls.from_modes(dim, [])

    def modes(self) -> List[Mode]:
        return [
            (tuple(int(c) for c in k), float(a), float(b))
            for k, a, b in zip(self.wavevectors, self.cos_coeffs, self.sin_coeffs)
        ]

    # Properties

    @property
    def num_modes(self) -> int:
        return len(self.cos_coeffs)

    @property
    def max_wavenumber(self) -> int:
        if self.num_modes == 0:
            return 0
        return int(np.abs(self.wavevectors).max())

    @property
    def mean(self) -> float:
        zero_mode = ~self.wavevectors.any(axis=1)
        return float(self.cos_coeffs[zero_mode].sum())

    @property
    def is_constant(self) -> bool:
        return not self.wavevectors.any()

    def lipschitz_bound(self) -> float:
        """Upper bound on |grad f| over the torus"""
        norms = np.linalg.norm(self.wavevectors, axis=1)
        return float(np.sum(norms * np.hypot(self.cos_coeffs, self.sin_coeffs)))

    def coefficient_l1(self) -> float:
        return float(np.abs(self.cos_coeffs).sum() + np.abs(self.sin_coeffs).sum())

    # Evaluation

    def _phases(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return q @ self.wavevectors.T.astype(float)

    def __call__(self, q: np.ndarray) -> np.ndarray:
        theta = self._phases(q)
        return np.cos(theta) @ self.cos_coeffs + np.sin(theta) @ self.sin_coeffs

    def gradient(self, q: np.ndarray) -> np.ndarray:
        theta = self._phases(q)
        weights = -np.sin(theta) * self.cos_coeffs + np.cos(theta) * self.sin_coeffs
        return weights @ self.wavevectors.astype(float)

    def hessian(self, q: np.ndarray) -> np.ndarray:
        theta = self._phases(q)
        weights = -(np.cos(theta) * self.cos_coeffs + np.sin(theta) * self.sin_coeffs)
        k = self.wavevectors.astype(float)
        return np.einsum("...m,mi,mj->...ij", weights, k, k)

    def laplacian(self, q: np.ndarray) -> np.ndarray:
        return self.laplacian_poly()(q)

    # Exact operators

    def derivative(self, axis: int) -> "TrigPoly":
        k_axis = self.wavevectors[:, axis].astype(float)
        return TrigPoly.from_modes(
            self.dim,
            zip(map(tuple, self.wavevectors), k_axis * self.sin_coeffs, -k_axis * self.cos_coeffs),
        )

    def laplacian_poly(self) -> "TrigPoly":
        k2 = np.sum(self.wavevectors.astype(float) ** 2, axis=1)
        return self._rescaled(-k2)

    def inverse_laplacian(self) -> "TrigPoly":
        """Mean-free solution u of Laplace(u) = f - mean(f)"""
        k2 = np.sum(self.wavevectors.astype(float) ** 2, axis=1)
        safe = np.where(k2 > 0, k2, 1.0)
        return self._rescaled(np.where(k2 > 0, -1.0 / safe, 0.0))

    def _rescaled(self, factors: np.ndarray) -> "TrigPoly":
        return TrigPoly.from_modes(
            self.dim,
            zip(map(tuple, self.wavevectors), factors * self.cos_coeffs, factors * self.sin_coeffs),
        )

    # Algebra

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError("cannot add trig polynomials of different dimension")
        return TrigPoly.from_modes(self.dim, self.modes() + other.modes())

    def __neg__(self) -> "TrigPoly":
        return self * -1.0

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return self + (-other)

    def __mul__(self, scalar: float) -> "TrigPoly":
        return self._rescaled(np.full(self.num_modes, float(scalar)))

    __rmul__ = __mul__

    def same_coefficients(self, other: "TrigPoly") -> bool:
        return (
            self.dim == other.dim
            and np.array_equal(self.wavevectors, other.wavevectors)
            and np.array_equal(self.cos_coeffs, other.cos_coeffs)
            and np.array_equal(self.sin_coeffs, other.sin_coeffs)
        )


@dataclass(frozen=True)
class FieldValue:
    value: np.ndarray
    gradient: np.ndarray
    laplacian: np.ndarray


def eval_field(f: TrigPoly, q: np.ndarray) -> FieldValue:
    """Value, gradient and Laplacian of f at q (any leading batch shape)"""
    return FieldValue(f(q), f.gradient(q), np.trace(f.hessian(q), axis1=-2, axis2=-1))
