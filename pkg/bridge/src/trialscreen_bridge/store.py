"""Append-only model registry with a JSON index on disk.

Entries are never replaced: training is content-addressed, so an existing
id already holds exactly the artifacts the request would produce. The
index survives restarts; fine-tuned weights live under root/<model_id>/.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Any

_INDEX_NAME = "index.json"


class ModelStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._entries: dict[str, dict[str, Any]] = {}
        index = self.root / _INDEX_NAME
        if index.exists():
            with open(index, "r", encoding="utf-8") as handle:
                self._entries = json.load(handle)

    def __contains__(self, model_id: str) -> bool:
        with self._lock:
            return model_id in self._entries

    def get(self, model_id: str) -> dict[str, Any] | None:
        with self._lock:
            return self._entries.get(model_id)

    def ids(self) -> list[str]:
        with self._lock:
            return list(self._entries)

    def model_dir(self, model_id: str) -> Path:
        return self.root / model_id

    def add(self, model_id: str, meta: dict[str, Any]) -> None:
        with self._lock:
            if model_id in self._entries:
                return
            self._entries[model_id] = meta
            with open(self.root / _INDEX_NAME, "w", encoding="utf-8") as handle:
                json.dump(self._entries, handle, indent=2)
                handle.write("\n")
