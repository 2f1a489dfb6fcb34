"""
實驗配置與執行紀錄的 Pydantic 模型
"""
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..config.settings import settings
from ..utils.errors import ConfigInvalid

ExperimentKind = Literal["integrate", "conjugate-scan", "sigma", "green-limit", "decompose", "validate"]


class ExperimentConfig(BaseModel):
    """實驗配置"""
    model_config = ConfigDict(extra="forbid")

    kind: ExperimentKind
    model: Optional[str] = Field(None, description="model definition file")
    output_dir: str = Field(default_factory=lambda: settings.output_dir)
    seed: int = Field(default_factory=lambda: settings.default_seed, ge=0)

    # integrate / green-limit
    T: float = Field(default=50.0, gt=0, le=1e6)
    tol: float = Field(default_factory=lambda: settings.integrator_tol, ge=1e-13, le=1e-4)
    method: Optional[Literal["DOP853", "RK45", "midpoint"]] = None
    formulation: Literal["gauged", "twisted"] = "gauged"
    initial_q: Optional[List[float]] = None
    initial_p: Optional[List[float]] = None
    samples_out: int = Field(default=1001, ge=2, le=1_000_000)
    times: List[float] = Field(default_factory=lambda: [10.0, 20.0, 40.0], min_length=1)

    # conjugate-scan
    samples: int = Field(default=100, ge=1, le=100_000)
    t_max: float = Field(default=10.0, gt=0, le=1e5)
    control: bool = False
    dump_traces: bool = False
    workers: int = Field(default_factory=lambda: settings.workers, ge=1, le=256)

    # sigma
    grid: Optional[int] = Field(None, ge=2, le=1024)
    sphere: Optional[int] = Field(None, ge=2, le=256)

    @field_validator("times")
    @classmethod
    def increasing_times(cls, values: List[float]) -> List[float]:
        if any(t <= 0 for t in values):
            raise ValueError("times must be positive")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("times must be strictly increasing")
        return values

    @model_validator(mode="after")
    def check_model(self):
        if self.kind != "validate" and not self.model:
            raise ValueError(f"experiment '{self.kind}' needs a model file")
        if self.initial_p is not None and self.initial_q is None:
            raise ValueError("initial_p given without initial_q")
        if self.initial_q is not None and self.initial_p is not None and len(self.initial_q) != len(self.initial_p):
            raise ValueError("initial_q and initial_p differ in length")
        return self


class RunRecord(BaseModel):
    """單次執行紀錄"""
    run_id: str
    kind: str
    config: Dict[str, Any]
    model_hash: Optional[str] = None
    started_at: str
    finished_at: str
    status: Literal["success", "failed"]
    artifacts: List[str] = Field(default_factory=list)
    summary: Dict[str, Any] = Field(default_factory=dict)


def diagnostics_from(error: ValidationError) -> List[Dict[str, Any]]:
    return [
        {"field": ".".join(str(part) for part in item["loc"]) or "config", "message": item["msg"]}
        for item in error.errors()
    ]


def parse_config(data: Dict[str, Any]) -> ExperimentConfig:
    """Validate a raw mapping; failures become ConfigInvalid with field diagnostics"""
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigInvalid(diagnostics_from(e)) from e
