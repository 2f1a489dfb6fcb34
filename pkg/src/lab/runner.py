"""
Experiment runner: config validation, model loading, dispatch, run records
"""
from __future__ import annotations

import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

from ..geometry.model import MagneticModel
from ..geometry.model_file import load_model, model_hash
from ..storage.run_index import RunIndex
from ..storage.writers import ArtifactWriter
from ..utils.errors import ConfigInvalid, ModelError, NotClosed
from ..utils.logger import get_logger
from . import experiments
from .schemas import ExperimentConfig, RunRecord, parse_config
from .validation import run_validate

Handler = Callable[..., Dict[str, Any]]


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class ExperimentFailed(Exception):
    """Experiment finished but its checks failed; carries the indexed record"""

    def __init__(self, record: RunRecord):
        self.record = record
        super().__init__(f"run {record.run_id} ({record.kind}) failed")


class ExperimentRunner:
    """實驗執行管理器"""

    def __init__(self):
        self.logger = get_logger("experiment_runner")
        self.handlers: Dict[str, Handler] = {
            "integrate": experiments.run_integrate,
            "conjugate-scan": experiments.run_conjugate_scan,
            "sigma": experiments.run_sigma,
            "green-limit": experiments.run_green_limit,
            "decompose": experiments.run_decompose,
        }

    def load_model(self, config: ExperimentConfig) -> Tuple[MagneticModel, str]:
        """Model errors are configuration errors, reported against the model field"""
        try:
            model = load_model(config.model)
        except NotClosed as e:
            raise ConfigInvalid([{
                "field": "model.magnetic_field",
                "message": str(e),
                "residual": e.residual,
                "tolerance": e.tolerance,
            }]) from e
        except ModelError as e:
            raise ConfigInvalid([{"field": "model", "message": str(e)}]) from e
        return model, model_hash(model)

    def run(self, config: ExperimentConfig) -> RunRecord:
        started = _timestamp()
        run_id = f"{config.kind}-{datetime.now(timezone.utc):%Y%m%dT%H%M%S}-{uuid.uuid4().hex[:8]}"
        index = RunIndex(config.output_dir)
        writer = ArtifactWriter(Path(config.output_dir) / run_id)
        self.logger.info(f"Starting run {run_id}")

        digest: Optional[str] = None
        try:
            with writer.transaction():
                if config.kind == "validate":
                    report = run_validate(model=config.model)
                    writer.json("validation_report.json", report.to_dict())
                    writer.csv("validation_checks.csv", report.to_frame().drop(columns=["seconds"]))
                    summary = {"passed": report.passed, "failures": report.failures}
                    status = "success" if report.passed else "failed"
                else:
                    model, digest = self.load_model(config)
                    summary = self.handlers[config.kind](config, model, writer, model_hash=digest)
                    status = "success"
        except Exception as e:
            self.logger.error(f"Run {run_id} failed: {e}")
            raise

        record = RunRecord(
            run_id=run_id,
            kind=config.kind,
            config=config.model_dump(mode="json"),
            model_hash=digest,
            started_at=started,
            finished_at=_timestamp(),
            status=status,
            artifacts=[str(Path(run_id) / name) for name in writer.relative_paths()],
            summary=summary,
        )
        index.append(record.model_dump(mode="json"))
        self.logger.info(f"Run {run_id} finished ({status}), {len(record.artifacts)} artifacts")
        if status != "success":
            raise ExperimentFailed(record)
        return record


def run_experiment(config: Any) -> RunRecord:
    """Validate ``config`` (mapping or ExperimentConfig) and run it"""
    if not isinstance(config, ExperimentConfig):
        config = parse_config(dict(config))
    return ExperimentRunner().run(config)
