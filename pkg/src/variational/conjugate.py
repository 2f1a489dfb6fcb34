"""
Conjugate-point detection on the vertical frame

The frame is sampled on a uniform grid in (t_floor, Tmax]. Each sample
interval is checked, in time order, for a sign change of det J (refined by
bisection) and for a local minimum of the orthonormalized sigma_min. At a
minimum the following interval is checked for a sign change first; otherwise
the minimum is refined by bounded scalar minimization. A minimum below ``conjugate_zero_threshold``
certifies a zero of even multiplicity; a minimum below
``conjugate_dip_threshold`` that is not certified makes the result ambiguous.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import bisect, minimize_scalar

from ..config.settings import settings
from ..dynamics.trajectory import PointLike, as_phase_point
from ..geometry.model import MagneticModel
from ..utils.errors import DetectorAmbiguous, NoConjugatePoint
from ..utils.logger import get_logger
from .frames import TangentFrame, orthonormal_sigma_min, propagate_vertical

logger = get_logger("variational.conjugate")

FOUND = "found"
NONE = "none"
AMBIGUOUS = "ambiguous"


@dataclass(frozen=True, eq=False)
class ConjugateReport:
    status: str
    t_max: float
    t_conj: Optional[float] = None
    certified_by: Optional[str] = None          # "sign_change" or "sigma_min"
    dip: Optional[Tuple[float, float]] = None   # (time, sigma_min) of an uncertified dip
    times: np.ndarray = field(default=None, repr=False)
    det_J: np.ndarray = field(default=None, repr=False)
    sigma_min: np.ndarray = field(default=None, repr=False)
    message: str = ""

    @property
    def found(self) -> bool:
        return self.status == FOUND

    def trace_frame(self) -> pd.DataFrame:
        """Detector trace with columns t, detJ, sigma_min"""
        return pd.DataFrame({"t": self.times, "detJ": self.det_J, "sigma_min": self.sigma_min})


def sample_times(t_max: float, t_floor: float, dt: float) -> np.ndarray:
    count = max(2, int(np.ceil(t_max / dt)))
    grid = np.linspace(0.0, t_max, count + 1)
    return np.concatenate([[t_floor], grid[grid > t_floor]])


class ConjugateDetector:
    """Locates the first conjugate time of the vertical subspace along one orbit"""

    def __init__(self, model: MagneticModel, integrator_tol: Optional[float] = None,
                 time_tol: Optional[float] = None, method: Optional[str] = None):
        self.model = model
        self.integrator_tol = integrator_tol if integrator_tol is not None else settings.integrator_tol
        self.time_tol = time_tol if time_tol is not None else settings.conjugate_time_tol
        self.method = method
        self.logger = get_logger("variational.conjugate")

    def scan(self, x0: PointLike, t_max: float) -> ConjugateReport:
        """Run the detector and return a report of any status"""
        if not t_max > 0:
            raise ValueError(f"Tmax must be positive, got {t_max}")
        t_floor = settings.conjugate_t_floor
        if t_max <= t_floor:
            raise ValueError(f"Tmax must exceed the floor {t_floor:g}")

        frame = propagate_vertical(self.model, as_phase_point(x0), t_max, self.integrator_tol,
                                   dense=True, method=self.method)
        times = sample_times(t_max, t_floor, settings.conjugate_sample_dt)
        J, P = frame.at(times)
        det = np.linalg.det(J)
        sigma = orthonormal_sigma_min(J, P)
        trace = dict(times=times, det_J=det, sigma_min=sigma)

        last = len(times) - 1
        for i in range(1, last + 1):
            if det[i - 1] * det[i] < 0.0:
                t_conj = self._refine_sign_change(frame, times[i - 1], times[i])
                return ConjugateReport(FOUND, t_max, t_conj, "sign_change", **trace)

            interior_min = i < last and sigma[i] <= sigma[i - 1] and sigma[i] <= sigma[i + 1]
            boundary_min = i == last and sigma[i] < sigma[i - 1]
            if not (interior_min or boundary_min):
                continue
            # a simple zero can sit just past the sampled minimum
            if i < last and det[i] * det[i + 1] < 0.0:
                t_conj = self._refine_sign_change(frame, times[i], times[i + 1])
                return ConjugateReport(FOUND, t_max, t_conj, "sign_change", **trace)
            t_min, s_min = self._refine_minimum(frame, times[i - 1], times[min(i + 1, last)])
            if s_min < settings.conjugate_zero_threshold:
                return ConjugateReport(FOUND, t_max, t_min, "sigma_min", **trace)
            if s_min < settings.conjugate_dip_threshold:
                message = f"sigma_min dips to {s_min:.3e} at t={t_min:.9g} without a certified zero"
                return ConjugateReport(AMBIGUOUS, t_max, dip=(t_min, s_min), message=message, **trace)

        return ConjugateReport(NONE, t_max, message=f"no conjugate point in (0, {t_max:g}]", **trace)

    def _det(self, frame: TangentFrame, t: float) -> float:
        J, _ = frame.at(t)
        return float(np.linalg.det(J))

    def _sigma(self, frame: TangentFrame, t: float) -> float:
        J, P = frame.at(t)
        return float(orthonormal_sigma_min(J, P))

    def _refine_sign_change(self, frame: TangentFrame, a: float, b: float) -> float:
        return float(bisect(lambda t: self._det(frame, t), a, b, xtol=self.time_tol))

    def _refine_minimum(self, frame: TangentFrame, a: float, b: float) -> Tuple[float, float]:
        # offset from the bracket centre: the bounded search adds sqrt(eps)*|x| to xatol
        center = 0.5 * (a + b)
        result = minimize_scalar(
            lambda s: self._sigma(frame, center + s),
            bounds=(a - center, b - center),
            method="bounded",
            options={"xatol": 0.1 * self.time_tol},
        )
        return center + float(result.x), float(result.fun)


def scan_conjugate_time(model: MagneticModel, x0: PointLike, t_max: float, tol: Optional[float] = None,
                        integrator_tol: Optional[float] = None, method: Optional[str] = None) -> ConjugateReport:
    return ConjugateDetector(model, integrator_tol, tol, method).scan(x0, t_max)


def first_conjugate_time(model: MagneticModel, x0: PointLike, t_max: float, tol: Optional[float] = None,
                         integrator_tol: Optional[float] = None, method: Optional[str] = None) -> ConjugateReport:
    """First conjugate time in (t_floor, Tmax]

    Raises NoConjugatePoint or DetectorAmbiguous, both carrying the report.
    """
    report = scan_conjugate_time(model, x0, t_max, tol, integrator_tol, method)
    if report.status == NONE:
        raise NoConjugatePoint(t_max, report)
    if report.status == AMBIGUOUS:
        logger.warning(f"{model.name}: {report.message}")
        raise DetectorAmbiguous(report.dip[0], report.dip[1], report)
    logger.debug(f"{model.name}: conjugate point at t={report.t_conj:.12g} ({report.certified_by})")
    return report
