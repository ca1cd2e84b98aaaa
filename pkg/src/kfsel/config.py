from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from kfsel.errors import ConfigError
from kfsel.generator import TrainConfig
from kfsel.qccr import CoverageKernel, LambdaTable, SOLVERS


@dataclass
class RunConfig:
    """Pipeline settings. JSON config keys and command-line flags share these
    names (flags spell underscores as dashes)."""

    T: int = 32
    N: int = 4
    K: int = 4
    D: int = 256
    tau: float | None = None  # None -> T / 8
    sigma_min: float = 0.01
    sigma_target: float | None = None  # None -> 1.5 / T
    alpha: float = 0.5
    dup_threshold: float = 0.95
    lambda_table: LambdaTable = field(default_factory=LambdaTable)
    lambda_override: float | None = None
    learning_rate: float = 1e-2
    epochs: int = 300
    seed: int = 0
    solver: str = "dp"
    workers: int | None = None
    no_train: bool = False
    no_qccr: bool = False
    no_sks: bool = False
    external_ranker: str | None = None
    external_timeout: float = 10.0

    def __post_init__(self):
        if isinstance(self.lambda_table, dict):
            self.lambda_table = LambdaTable.from_mapping(self.lambda_table)
        if self.N < 1 or self.N > self.T:
            raise ConfigError(f"N={self.N} must lie in [1, T={self.T}]")
        if self.K < 1:
            raise ConfigError("K must be >= 1")
        if self.D < 8:
            raise ConfigError("D must be >= 8")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {sorted(SOLVERS)}, got {self.solver!r}")
        if self.lambda_override is not None and self.lambda_override < 0:
            raise ConfigError("lambda_override must be >= 0")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")
        try:
            self.train_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def kernel(self) -> CoverageKernel:
        return CoverageKernel(self.tau if self.tau is not None else self.T / 8.0)

    @property
    def target_width(self) -> float:
        return self.sigma_target if self.sigma_target is not None else 1.5 / self.T

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            seed=self.seed,
            sigma_min=self.sigma_min,
            sigma_target=self.target_width,
        )

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["lambda_table"] = self.lambda_table.to_dict()
        return out

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def load(cls, path=None, **overrides) -> "RunConfig":
        values: dict = {}
        if path is not None:
            try:
                values = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from None
            if not isinstance(values, dict):
                raise ConfigError(f"config {path} must hold a JSON object")
        values.update({k: v for k, v in overrides.items() if v is not None})
        unknown = set(values) - set(cls.keys())
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
