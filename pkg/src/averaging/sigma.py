"""
Level-set averages over {H = 1/2} against the invariant measure

Points of the level are parametrized by (q, omega) in T^n x S^{n-1} through
p = alpha(q) + lambda(q)^{-1/2} omega, with measure weight lambda^{-n/2}
(dmu ^ dH = omega_0^n). On the level,

    tr(H_qq - H_qp H_pp^{-1} H_pq) = Laplace(lambda) / (2 lambda) - |grad lambda|^2 / lambda^2,

and integrating by parts gives the closed form
    sigma(H) = Vol(S^{n-1}) (n - 2) / 4 * int lambda^{-2-n/2} |grad lambda|^2 dq.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..config.settings import settings
from ..geometry.hamiltonian import Formulation, as_formulation, hamiltonian_blocks, sample_fields, trace_integrand
from ..geometry.model import MagneticModel
from ..geometry.trig_poly import TWO_PI, eval_field, uniform_grid
from ..utils.errors import GridTooCoarseWarning
from ..utils.logger import get_logger
from .quadrature import QuadratureGrid, sphere_volume

logger = get_logger("averaging.sigma")


@dataclass(frozen=True)
class LevelSample:
    q: np.ndarray
    p: np.ndarray
    weight: np.ndarray


def level_parametrize(model: MagneticModel, q: np.ndarray, omega: np.ndarray, which="H_tilde") -> LevelSample:
    """Point of {H~ = 1/2} (or {H = 1/2}) over q in direction omega, with its measure weight"""
    q = np.asarray(q, dtype=float)
    omega = np.asarray(omega, dtype=float)
    lam = model.lam(q)
    p = lam[..., None] ** -0.5 * omega
    if as_formulation(which) is Formulation.GAUGED and not model.alpha.is_zero:
        p = p + model.alpha(q)
    return LevelSample(q, p, lam ** (-0.5 * model.dim))


@dataclass(frozen=True)
class SigmaResult:
    value: float
    which: str
    grid: dict
    integrand_min: float
    integrand_max: float
    converged: bool = True
    convergence: List[Tuple[int, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "which": self.which,
            "grid": self.grid,
            "integrand_min": self.integrand_min,
            "integrand_max": self.integrand_max,
            "converged": self.converged,
            "convergence": [{"torus_size": size, "value": value} for size, value in self.convergence],
        }


def _slab(model: MagneticModel, grid: QuadratureGrid, q: np.ndarray, which: Formulation):
    """Level points for one q-slab, broadcast as (slab, 1, n) against (slab, M, n)"""
    q3 = q[:, None, :]
    fields = sample_fields(model, q3)
    p = fields.lam[..., None] ** -0.5 * grid.sphere_nodes[None, :, :]
    if which is Formulation.GAUGED:
        p = p + fields.alpha
    weights = fields.lam ** (-0.5 * model.dim) * grid.sphere_weights[None, :] * grid.torus_weight
    return q3, p, fields, weights


def _integrate_sigma(model: MagneticModel, grid: QuadratureGrid, which: Formulation) -> Tuple[float, float, float]:
    total = 0.0
    lowest, highest = np.inf, -np.inf
    for q in grid.chunks():
        q3, p, fields, weights = _slab(model, grid, q, which)
        values = trace_integrand(hamiltonian_blocks(model, q3, p, which, fields))
        total += float(np.sum(values * weights))
        lowest = min(lowest, float(values.min()))
        highest = max(highest, float(values.max()))
    return total, lowest, highest


def sigma_direct(model: MagneticModel, which="H", grid: Optional[QuadratureGrid] = None,
                 check_convergence: bool = True) -> SigmaResult:
    """Quadrature of tr(H_qq - H_qp H_pp^{-1} H_pq) over the level with analytic blocks"""
    formulation = as_formulation(which)
    grid = grid or QuadratureGrid.for_model(model)
    value, lowest, highest = _integrate_sigma(model, grid, formulation)
    convergence = [(grid.size, value)]
    converged = True
    if check_convergence:
        finer = grid.refined()
        refined_value, _, _ = _integrate_sigma(model, finer, formulation)
        convergence.append((finer.size, refined_value))
        if abs(refined_value - value) > settings.grid_convergence_tol:
            converged = False
            message = (f"sigma({formulation.value}) on {model.name} changed by {abs(refined_value - value):.3e} "
                       f"when the torus grid was doubled to {finer.size}")
            logger.warning(message)
            warnings.warn(message, GridTooCoarseWarning)
    logger.debug(f"sigma({formulation.value}) on {model.name}: {value:.15g}")
    return SigmaResult(value, formulation.value, grid.describe(), lowest, highest, converged, convergence)


def _closed_form_grid(dim: int, size: Optional[int]) -> int:
    if size:
        return size
    return settings.closed_form_grid if dim <= 3 else settings.closed_form_grid // 2


def closed_form_integral(model: MagneticModel, size: Optional[int] = None) -> float:
    """int over T^n of lambda^{-2-n/2} |grad lambda|^2 dq"""
    n = model.dim
    size = _closed_form_grid(n, size)
    lam = eval_field(model.lam, uniform_grid(n, size))
    integrand = lam.value ** (-2.0 - 0.5 * n) * np.sum(lam.gradient ** 2, axis=-1)
    return float(np.sum(integrand)) * (TWO_PI / size) ** n


def sigma_closed_form(model: MagneticModel, size: Optional[int] = None) -> float:
    """Vol(S^{n-1}) (n - 2)/4 int lambda^{-2-n/2} |grad lambda|^2 dq"""
    n = model.dim
    if model.lam.is_constant or n == 2:
        return 0.0
    return sphere_volume(n) * (n - 2) / 4.0 * closed_form_integral(model, size)


def sigma_displayed_coefficient(model: MagneticModel, size: Optional[int] = None) -> float:
    """Level average with coefficient 1/(2 lambda^2) on |grad lambda|^2 in place of 1/lambda^2

    Integrates by parts to Vol(S^{n-1}) n/4 int lambda^{-2-n/2} |grad lambda|^2 dq.
    """
    n = model.dim
    size = _closed_form_grid(n, size)
    lam = eval_field(model.lam, uniform_grid(n, size))
    values = lam.value
    integrand = values ** (-0.5 * n) * (
        lam.laplacian / (2.0 * values) - np.sum(lam.gradient ** 2, axis=-1) / (2.0 * values ** 2)
    )
    return sphere_volume(n) * float(np.sum(integrand)) * (TWO_PI / size) ** n


def gauge_invariance_check(model: MagneticModel, grid: Optional[QuadratureGrid] = None) -> float:
    """|sigma(H~) - sigma(H)| on a common grid"""
    grid = grid or QuadratureGrid.for_model(model)
    gauged = sigma_direct(model, "H_tilde", grid, check_convergence=False).value
    twisted = sigma_direct(model, "H", grid, check_convergence=False).value
    return abs(gauged - twisted)


def odd_integrand_check(model: MagneticModel, grid: Optional[QuadratureGrid] = None, absolute: bool = False) -> float:
    """Quadrature of sum_{k,i} H_{p_k} d^2 alpha_k / dq_i^2 over the level; odd in omega

    ``absolute`` replaces H_{p_k} by |H_{p_k}| (nonzero whenever alpha is not harmonic).
    """
    if model.alpha.is_zero:
        return 0.0
    grid = grid or QuadratureGrid.for_model(model)
    total = 0.0
    for q in grid.chunks():
        q3, p, fields, weights = _slab(model, grid, q, Formulation.GAUGED)
        H_p = fields.lam[..., None] * (p - fields.alpha)
        if absolute:
            H_p = np.abs(H_p)
        alpha_laplacian = np.trace(fields.d2_alpha, axis1=-2, axis2=-1)
        total += float(np.sum(np.sum(H_p * alpha_laplacian, axis=-1) * weights))
    return total


@dataclass(frozen=True)
class MassCheck:
    direct: float
    fourier: float

    @property
    def difference(self) -> float:
        return abs(self.direct - self.fourier)


def total_mass(model: MagneticModel, grid: Optional[QuadratureGrid] = None) -> MassCheck:
    """Mass of the level by summing node weights, and by the FFT zero mode of lambda^{-n/2} on the doubled grid"""
    grid = grid or QuadratureGrid.for_model(model)
    n = model.dim
    direct = 0.0
    for q in grid.chunks():
        _, _, _, weights = _slab(model, grid, q, Formulation.TWISTED)
        direct += float(np.sum(weights))
    finer = grid.refined()
    density = model.lam(finer.torus_nodes) ** (-0.5 * n)
    zero_mode = np.fft.fftn(density.reshape((finer.size,) * n))[(0,) * n].real / finer.size ** n
    fourier = sphere_volume(n) * TWO_PI ** n * float(zero_mode)
    return MassCheck(direct, fourier)


def sigma_report(model: MagneticModel, grid: Optional[QuadratureGrid] = None, model_hash: str = "") -> dict:
    """All sigma quantities for one model on one grid, as a JSON-ready document"""
    grid = grid or QuadratureGrid.for_model(model)
    twisted = sigma_direct(model, "H", grid)
    gauged = sigma_direct(model, "H_tilde", grid)
    closed = sigma_closed_form(model)
    displayed = sigma_displayed_coefficient(model)
    n = model.dim
    mass = total_mass(model, grid)
    report = {
        "model": model.name,
        "model_hash": model_hash,
        "grid": grid.describe(),
        "sigma_H": twisted.value,
        "sigma_H_tilde": gauged.value,
        "sigma_closed_form": closed,
        "sigma_displayed_coefficient": displayed,
        "closed_form_constant_ratio": None if n == 2 else n / (n - 2),
        "discrepancy_gauge": abs(gauged.value - twisted.value),
        "discrepancy_closed_form": abs(twisted.value - closed),
        "relative_discrepancy_closed_form": abs(twisted.value - closed) / abs(closed) if closed else None,
        "odd_integrand": odd_integrand_check(model, grid),
        "total_mass": {"direct": mass.direct, "fourier": mass.fourier, "difference": mass.difference},
        "converged": twisted.converged and gauged.converged,
        "convergence": {"H": twisted.to_dict()["convergence"], "H_tilde": gauged.to_dict()["convergence"]},
    }
    logger.info(f"sigma on {model.name}: H={twisted.value:.12g}, H~={gauged.value:.12g}, closed={closed:.12g}")
    return report
