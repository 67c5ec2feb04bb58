"""Exploration configuration and config-file loading."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import yaml

from vpsearch.errors import ConfigurationError


@dataclass
class ExplorationConfig:
    """Hyperparameters of one exploration run.

    The lambda coefficients weigh the exploration, novelty, and saturation
    terms of the priority formulas; ``k`` is the number of unexecuted
    children every executed node maintains.
    """

    lambda_expl: float = 0.5
    lambda_novel: float = 0.15
    lambda_sat: float = 0.5
    k: int = 3
    iteration_budget: int = 50
    seed: int = 0
    feasibility_threshold: int = 3
    max_regeneration_attempts: int = 3
    parallel_width: int = 4

    def validate(self) -> None:
        if self.lambda_expl < 0 or self.lambda_novel < 0 or self.lambda_sat < 0:
            raise ConfigurationError("lambda coefficients must be nonnegative")
        if self.k < 1:
            raise ConfigurationError("k must be a positive integer")
        if self.iteration_budget < 1:
            raise ConfigurationError("iteration_budget must be a positive integer")
        if not 1 <= self.feasibility_threshold <= 5:
            raise ConfigurationError("feasibility_threshold must be in 1..5")
        if self.max_regeneration_attempts < 1:
            raise ConfigurationError("max_regeneration_attempts must be positive")
        if self.parallel_width < 1:
            raise ConfigurationError("parallel_width must be positive")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "ExplorationConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        config = cls(**data)
        config.validate()
        return config


def load_config(path: str | Path) -> ExplorationConfig:
    """Load an ExplorationConfig from a YAML or JSON file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config file {path} is not valid YAML/JSON: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must hold a mapping")
    return ExplorationConfig.from_mapping(data)
