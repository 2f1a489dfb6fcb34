"""
Exception hierarchy shared by all lab modules
"""
from typing import Any, Dict, List, Optional


class TorusLabError(Exception):
    """Base class for every error raised by the lab"""


# Model errors

class ModelError(TorusLabError):
    """Invalid geometric data"""


class NonPositiveConformalFactor(ModelError):
    """Certified lower bound of the conformal factor is not positive"""

    def __init__(self, lower_bound: float, sample_min: float):
        self.lower_bound = lower_bound
        self.sample_min = sample_min
        super().__init__(
            f"conformal factor lower bound {lower_bound:.6g} <= 0 "
            f"(sampled minimum {sample_min:.6g})"
        )


class NotClosed(ModelError):
    """Magnetic 2-form fails the closedness test"""

    def __init__(self, residual: float, tolerance: float):
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(f"2-form is not closed: residual {residual:.3e} > {tolerance:.1e}")


class ModelFileError(ModelError):
    """Model definition file cannot be parsed"""


# Dynamics errors

class IntegrationError(TorusLabError):
    """Integrator could not complete the requested span"""


class StepSizeCollapse(IntegrationError):
    def __init__(self, t: float, step: float, min_step: float):
        self.t = t
        self.step = step
        self.min_step = min_step
        super().__init__(
            f"step size {step:.3e} fell below minimum {min_step:.3e} at t={t:.9g}"
        )


class ZeroVelocity(TorusLabError):
    """Kinetic momentum vanishes, the point cannot be put on the energy level"""


# Variational errors

class DetectorError(TorusLabError):
    """Conjugate-point detector did not return a certified time"""

    def __init__(self, message: str, report: Any = None):
        self.report = report
        super().__init__(message)


class NoConjugatePoint(DetectorError):
    def __init__(self, t_max: float, report: Any = None):
        self.t_max = t_max
        super().__init__(f"no conjugate point in (0, {t_max:.6g}]", report)


class DetectorAmbiguous(DetectorError):
    def __init__(self, dip_time: float, dip_value: float, report: Any = None):
        self.dip_time = dip_time
        self.dip_value = dip_value
        super().__init__(
            f"sigma_min dips to {dip_value:.3e} at t={dip_time:.9g} without a certified zero",
            report,
        )


class InvalidInitial(TorusLabError):
    """Initial Riccati matrix violates the Lagrangian condition"""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"initial matrix is not Lagrangian: residual {residual:.3e}")


class FrameSingular(TorusLabError):
    """Jacobi block of a frame is numerically singular"""

    def __init__(self, t: float, sigma_min: float):
        self.t = t
        self.sigma_min = sigma_min
        super().__init__(f"frame singular at T={t:.9g} (sigma_min {sigma_min:.3e})")


# Averaging errors

class QuadratureError(TorusLabError):
    """Quadrature requested outside the supported dimensions"""


class GridTooCoarseWarning(UserWarning):
    """Doubling the torus grid changed a quadrature result beyond tolerance"""


# Lab errors

class ConfigInvalid(TorusLabError):
    """Experiment configuration rejected, with field-level diagnostics"""

    def __init__(self, diagnostics: List[Dict[str, Any]], message: Optional[str] = None):
        self.diagnostics = diagnostics
        summary = "; ".join(f"{d.get('field', '?')}: {d.get('message', '')}" for d in diagnostics)
        super().__init__(message or f"invalid configuration: {summary}")
