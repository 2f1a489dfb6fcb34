"""
Finite-time approximations of the stable Lagrangian field

For each T the base point is flowed back to g~^{-T}(x), the vertical frame
is pushed forward for time T and A_T = P(T) J(T)^{-1} is recorded. Samples
where J(T) is numerically singular are flagged and skipped.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ..config.settings import settings
from ..dynamics.trajectory import PhasePoint, PointLike, as_phase_point, integrate
from ..geometry.model import MagneticModel
from ..utils.errors import FrameSingular
from ..utils.logger import get_logger
from .frames import orthonormal_sigma_min, propagate_vertical
from .riccati import lagrangian_residual

logger = get_logger("variational.green")


@dataclass(frozen=True, eq=False)
class GreenSample:
    T: float
    A: Optional[np.ndarray]
    start: PhasePoint
    sigma_min: float
    lagrangian_residual: Optional[float] = None
    error: Optional[FrameSingular] = None

    @property
    def singular(self) -> bool:
        return self.error is not None

    @property
    def norm(self) -> Optional[float]:
        return None if self.A is None else float(np.linalg.norm(self.A))


@dataclass(frozen=True, eq=False)
class GreenLimit:
    samples: List[GreenSample]
    cauchy: List[Optional[float]] = field(default_factory=list)    # ||A_{T_k+1} - A_{T_k}||
    ratios: List[Optional[float]] = field(default_factory=list)    # ||A_{T_k+1}|| / ||A_{T_k}||

    @property
    def flagged_times(self) -> List[float]:
        return [s.T for s in self.samples if s.singular]

    def to_records(self) -> List[dict]:
        records = []
        for index, sample in enumerate(self.samples):
            records.append({
                "T": sample.T,
                "singular": sample.singular,
                "sigma_min": sample.sigma_min,
                "norm_A": sample.norm,
                "lagrangian_residual": sample.lagrangian_residual,
                "cauchy": self.cauchy[index - 1] if index else None,
                "ratio": self.ratios[index - 1] if index else None,
                "A": None if sample.A is None else sample.A.tolist(),
            })
        return records


def green_sample(model: MagneticModel, x: PhasePoint, T: float, tol: float) -> GreenSample:
    start = integrate(model, x, T, tol, direction=-1, t_eval=np.array([T])).final
    frame = propagate_vertical(model, start, T, tol, t_eval=np.array([T]))
    J, P = frame.J[-1], frame.P[-1]
    sigma = float(orthonormal_sigma_min(J, P))
    if sigma < settings.conjugate_zero_threshold:
        error = FrameSingular(T, sigma)
        logger.warning(f"{model.name}: {error}")
        return GreenSample(T, None, start, sigma, error=error)
    A = np.linalg.solve(J.T, P.T).T
    return GreenSample(T, A, start, sigma, lagrangian_residual(A, model.gamma))


def green_limit(model: MagneticModel, x: PointLike, times: Sequence[float], tol: Optional[float] = None) -> GreenLimit:
    """A_T for increasing T with Cauchy and decay diagnostics between consecutive samples"""
    times = [float(t) for t in times]
    if not times or any(t <= 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be a nonempty strictly increasing list of positive values")
    tol = settings.integrator_tol if tol is None else tol
    x = as_phase_point(x)

    samples = [green_sample(model, x, T, tol) for T in times]
    cauchy, ratios = [], []
    for previous, current in zip(samples, samples[1:]):
        if previous.A is None or current.A is None:
            cauchy.append(None)
            ratios.append(None)
            continue
        cauchy.append(float(np.linalg.norm(current.A - previous.A)))
        ratios.append(current.norm / previous.norm if previous.norm else None)
    logger.info(
        f"green limit on {model.name}: {len(samples)} times, "
        f"{sum(s.singular for s in samples)} singular"
    )
    return GreenLimit(samples, cauchy, ratios)
