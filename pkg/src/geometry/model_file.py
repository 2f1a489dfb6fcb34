"""
Model definition files (JSON, schema_version = 1)

Schema::

    {
      "schema_version": 1,
      "name": "flat-constant-b",
      "dimension": 2,
      "conformal_factor": [{"k": [0, 0], "a": 1.0, "b": 0.0}, ...],
      "magnetic_field": [{"i": 1, "j": 2, "modes": [...]}, ...],
      "potential": [[...modes of alpha_1...], [...modes of alpha_2...]],
      "harmonic": [{"i": 1, "j": 2, "value": 0.5}]
    }

Indices are 1-based with i < j. A mode {"k", "a", "b"} stands for
a cos(k.q) + b sin(k.q). "potential" and "harmonic" are optional: when the
potential is present the gauge is taken as given (and beta = d alpha + gamma
if "magnetic_field" is absent), otherwise beta is decomposed.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from ..config.settings import settings
from ..utils.errors import ModelError, ModelFileError
from .forms import GaugeData, OneForm, TwoForm
from .model import ConformalFactor, MagneticModel
from .trig_poly import TrigPoly

SCHEMA_VERSION = 1


class ModeSpec(BaseModel):
    """One Fourier mode"""
    k: List[int]
    a: float = 0.0
    b: float = 0.0


class FormComponentSpec(BaseModel):
    """Component beta_ij of the magnetic 2-form"""
    i: int = Field(..., ge=1)
    j: int = Field(..., ge=1)
    modes: List[ModeSpec] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_order(self):
        if self.i >= self.j:
            raise ValueError(f"component ({self.i},{self.j}) must have i < j")
        return self


class HarmonicSpec(BaseModel):
    """Constant entry Gamma_ij of the harmonic part"""
    i: int = Field(..., ge=1)
    j: int = Field(..., ge=1)
    value: float

    @model_validator(mode="after")
    def check_order(self):
        if self.i >= self.j:
            raise ValueError(f"entry ({self.i},{self.j}) must have i < j")
        return self


class ModelFile(BaseModel):
    """Model definition document"""
    schema_version: Literal[1] = SCHEMA_VERSION
    name: str = Field(default="model", min_length=1, max_length=100)
    dimension: int = Field(..., ge=2, le=16)
    conformal_factor: List[ModeSpec] = Field(..., min_length=1)
    magnetic_field: List[FormComponentSpec] = Field(default_factory=list)
    potential: Optional[List[List[ModeSpec]]] = None
    harmonic: List[HarmonicSpec] = Field(default_factory=list)

    @field_validator("magnetic_field", "harmonic")
    @classmethod
    def unique_components(cls, entries):
        keys = [(e.i, e.j) for e in entries]
        if len(keys) != len(set(keys)):
            raise ValueError("duplicate component")
        return entries

    @model_validator(mode="after")
    def check_dimensions(self):
        n = self.dimension
        modes = list(self.conformal_factor)
        for component in self.magnetic_field:
            if component.j > n:
                raise ValueError(f"component ({component.i},{component.j}) exceeds dimension {n}")
            modes.extend(component.modes)
        for entry in self.harmonic:
            if entry.j > n:
                raise ValueError(f"harmonic entry ({entry.i},{entry.j}) exceeds dimension {n}")
        if self.potential is not None:
            if len(self.potential) != n:
                raise ValueError(f"potential needs {n} components, got {len(self.potential)}")
            for component in self.potential:
                modes.extend(component)
        for mode in modes:
            if len(mode.k) != n:
                raise ValueError(f"wavevector {mode.k} does not have dimension {n}")
        return self


def _poly(dim: int, modes: List[ModeSpec]) -> TrigPoly:
    return TrigPoly.from_modes(dim, [(tuple(m.k), m.a, m.b) for m in modes])


def _modes(poly: TrigPoly) -> List[ModeSpec]:
    return [ModeSpec(k=list(k), a=a, b=b) for k, a, b in poly.modes()]


def parse_model_text(text: str) -> ModelFile:
    try:
        return ModelFile.model_validate_json(text)
    except ValidationError as e:
        raise ModelFileError(f"invalid model file: {e}") from e


def build_model(spec: ModelFile) -> MagneticModel:
    """Construct and certify the model described by a parsed file"""
    n = spec.dimension
    lam = _poly(n, spec.conformal_factor)
    beta = TwoForm(n, {(c.i - 1, c.j - 1): _poly(n, c.modes) for c in spec.magnetic_field})

    if spec.potential is None:
        if spec.harmonic:
            raise ModelFileError("'harmonic' entries require an explicit 'potential'")
        return MagneticModel.from_beta(lam, beta, spec.name)

    gamma = np.zeros((n, n))
    for entry in spec.harmonic:
        gamma[entry.i - 1, entry.j - 1] = entry.value
        gamma[entry.j - 1, entry.i - 1] = -entry.value
    alpha = OneForm(tuple(_poly(n, component) for component in spec.potential))
    if not spec.magnetic_field:
        return MagneticModel.from_gauge(lam, alpha, gamma, spec.name)

    gauge = GaugeData(alpha, gamma)
    mismatch = gauge.reconstruction_residual(beta)
    if mismatch > settings.gauge_tol:
        raise ModelError(f"potential does not reproduce the magnetic field: residual {mismatch:.3e}")
    return MagneticModel(ConformalFactor.certify(lam), beta, gauge, spec.name)


def model_to_spec(model: MagneticModel) -> ModelFile:
    n = model.dim
    gamma = model.gamma
    return ModelFile(
        name=model.name,
        dimension=n,
        conformal_factor=_modes(model.lam),
        magnetic_field=[
            FormComponentSpec(i=i + 1, j=j + 1, modes=_modes(poly))
            for (i, j), poly in sorted(model.beta.pieces.items())
            if poly.num_modes
        ],
        potential=[_modes(component) for component in model.alpha.components],
        harmonic=[
            HarmonicSpec(i=i + 1, j=j + 1, value=float(gamma[i, j]))
            for i in range(n) for j in range(i + 1, n)
            if gamma[i, j] != 0.0
        ],
    )


def serialize_model(model: MagneticModel) -> str:
    """Canonical JSON text; parse -> serialize -> parse preserves every coefficient"""
    return json.dumps(model_to_spec(model).model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def model_hash(model: MagneticModel) -> str:
    canonical = json.dumps(model_to_spec(model).model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_model(path: Union[str, Path]) -> MagneticModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ModelFileError(f"cannot read model file {path}: {e}") from e
    return build_model(parse_model_text(text))


def save_model(model: MagneticModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_model(model), encoding="utf-8")
    return path
