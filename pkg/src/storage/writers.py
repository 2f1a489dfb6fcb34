"""
結果檔案寫入管理

Every artifact of a run goes through one ArtifactWriter. Inside
``transaction()`` a failure removes everything the run wrote before the error
propagates, so no partial output survives without a run record.
"""
from __future__ import annotations

import json
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Generator, List, Union

import pandas as pd

from ..utils.logger import get_logger

FLOAT_FORMAT = "%.17g"


def dumps_json(document: Any) -> str:
    """Canonical JSON text (sorted keys, two-space indent, trailing newline)"""
    return json.dumps(document, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def write_json(document: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(document), encoding="utf-8")
    return path


class ArtifactWriter:
    """寫入並追蹤單次執行的輸出檔案"""

    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)
        self.artifacts: List[Path] = []
        self.logger = get_logger("artifact_writer")

    def _target(self, name: str) -> Path:
        path = self.output_dir / name
        if path in self.artifacts:
            raise ValueError(f"artifact {name} written twice in one run")
        return path

    def csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = write_csv(frame, self._target(name))
        self.artifacts.append(path)
        self.logger.debug(f"wrote {path} ({len(frame)} rows)")
        return path

    def json(self, name: str, document: Any) -> Path:
        path = write_json(document, self._target(name))
        self.artifacts.append(path)
        self.logger.debug(f"wrote {path}")
        return path

    def relative_paths(self) -> List[str]:
        return [str(p.relative_to(self.output_dir)) for p in self.artifacts]

    def discard(self):
        """刪除本次執行已寫入的所有檔案"""
        for path in reversed(self.artifacts):
            try:
                path.unlink()
            except FileNotFoundError:
                pass
            except OSError as e:
                self.logger.error(f"Failed to remove partial artifact {path}: {e}")
        removed = len(self.artifacts)
        self.artifacts = []
        if self.output_dir.is_dir():
            nested = sorted((p for p in self.output_dir.rglob("*") if p.is_dir()), reverse=True)
            for directory in nested + [self.output_dir]:
                if not any(directory.iterdir()):
                    directory.rmdir()
        if removed:
            self.logger.info(f"Removed {removed} partial artifacts from {self.output_dir}")

    @contextmanager
    def transaction(self) -> Generator["ArtifactWriter", None, None]:
        """寫入交易（上下文管理器）：失敗時清除部分輸出"""
        try:
            yield self
        except BaseException:
            self.discard()
            raise
