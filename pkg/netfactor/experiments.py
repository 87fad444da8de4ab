from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from netfactor.errors import InputError
from netfactor.models import ExperimentSpec

logger = logging.getLogger(__name__)


def load_experiment_spec(path: Path) -> ExperimentSpec:
    """
    Parse one flat JSON experiment config. A missing "name" defaults to the
    filename stem.
    """

    data = _load_json(path)
    data.setdefault("name", path.stem)
    try:
        return ExperimentSpec.model_validate(data)
    except ValidationError as e:
        raise InputError(f"Invalid experiment config {path.name}: {e.errors()[0]['msg']}") from e


def _load_json(path: Path) -> dict[str, Any]:
    try:
        raw = path.read_text(encoding="utf-8")
        data = json.loads(raw)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"Failed to load experiment JSON: {path}") from e
    if not isinstance(data, dict):
        raise InputError(f"Experiment config must be a JSON object: {path}")
    return data


class ExperimentStore:
    """
    Loads the bundled experiment configs from disk and keeps them in memory.

    File format (example):
      {
        "protocol": "degree",
        "n": 100, "p": 100, "k": 10,
        "alpha": 1.0,
        "variants": ["nnmf", "dnmf"]
      }

    Name is the filename without extension.
    """

    def __init__(self, experiments_dir: Path):
        self.experiments_dir = experiments_dir
        self._cache: dict[str, ExperimentSpec] = {}

    def list(self) -> list[str]:
        return sorted(self._cache.keys())

    def reload(self) -> None:
        specs: dict[str, ExperimentSpec] = {}
        if not self.experiments_dir.exists():
            raise InputError(f"Experiments directory not found: {self.experiments_dir}")

        for path in sorted(self.experiments_dir.glob("*.json")):
            specs[path.stem] = load_experiment_spec(path)

        self._cache = specs
        logger.info("Experiments loaded: %s", ", ".join(self.list()))

    def get(self, name: str) -> ExperimentSpec:
        if name not in self._cache:
            raise InputError(f"Experiment not found: {name} (known: {', '.join(self.list()) or 'none'})")
        return self._cache[name]
