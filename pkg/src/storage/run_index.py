"""
執行紀錄索引 (append-only JSON Lines)
"""
from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Any, Dict, List, Union

from ..config.settings import settings
from ..utils.logger import get_logger

_lock = threading.Lock()


class RunIndex:
    """One JSON object per line, appended under a process-wide lock"""

    def __init__(self, output_dir: Union[str, Path, None] = None):
        self.output_dir = Path(output_dir or settings.output_dir)
        self.path = self.output_dir / settings.run_index_name
        self.logger = get_logger("run_index")

    def append(self, record: Dict[str, Any]) -> Path:
        line = json.dumps(record, sort_keys=True, separators=(",", ":"))
        with _lock:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(line + "\n")
        self.logger.debug(f"indexed run {record.get('run_id', '?')} in {self.path}")
        return self.path

    def records(self) -> List[Dict[str, Any]]:
        if not self.path.exists():
            return []
        with self.path.open(encoding="utf-8") as handle:
            return [json.loads(line) for line in handle if line.strip()]

    def referenced_artifacts(self) -> List[str]:
        paths: List[str] = []
        for record in self.records():
            paths.extend(record.get("artifacts", []))
        return paths
