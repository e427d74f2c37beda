"""Experiment configuration and seeding."""

from __future__ import annotations

import json
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

TASKS = ("kernel", "benchmark", "claim1-demo", "elasticity", "nth-probe", "hoeffding-check", "selftest")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Everything a run needs; serialized verbatim into the output directory.

    ``data`` describes either CSV inputs ({"train": path, "test": path,
    "label_column": name}) or a synthetic generator ({"generator": name, ...}).
    ``kernel`` is {"kind": "agnostic"} | {"kind": "hr", "estimator": ..., "lam": ...}
    | {"kind": "nth", "t": ..., "mc_samples": ...}.
    """

    task: str = "benchmark"
    data: dict = field(default_factory=lambda: {"generator": "two_clusters"})
    kernel: dict = field(default_factory=lambda: {"kind": "agnostic"})
    estimators: list = field(default_factory=lambda: ["fjlt_v1"])
    lam_grid: list = field(default_factory=lambda: [0.001, 0.01, 0.1, 1.0])
    ridge: float | None = None
    seed: int = 0
    seeds: int = 1
    params: dict = field(default_factory=dict)
    out: str = "runs/out"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; choose from {TASKS}")
        if self.ridge is not None and self.ridge < 0:
            raise ConfigError("ridge must be non-negative")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.seeds < 1:
            raise ConfigError("seeds must be at least 1")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_json(obj)


def substream(root: int, name: str, *extra: int) -> np.random.Generator:
    """Independent generator for a named purpose, derived from one root seed."""
    return np.random.default_rng([int(root), zlib.crc32(name.encode()), *map(int, extra)])


def subseed(root: int, name: str, *extra: int) -> int:
    """Integer seed for APIs that take ints, derived like ``substream``."""
    return int(substream(root, name, *extra).integers(0, 2 ** 31 - 1))
