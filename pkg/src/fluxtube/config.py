"""Experiment configuration: a YAML document validated by pydantic."""
from __future__ import annotations

from pathlib import Path
from typing import Any, Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .models import MODEL_NAMES

SCHEMA_VERSION = 1

KINDS = ("spectral-flow", "index", "verify", "bulk-edge", "classify", "zero-modes", "gauge-check")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelConfig(_Strict):
    name: str = "p_ip"
    params: dict[str, Any] = Field(default_factory=dict)

    @field_validator("name")
    @classmethod
    def _known(cls, v):
        if v not in MODEL_NAMES:
            raise ValueError(f"unknown model {v!r}; choose from {list(MODEL_NAMES)}")
        return v


class LatticeConfig(_Strict):
    nx: int = Field(24, ge=4)
    ny: int = Field(24, ge=4)
    boundary: Literal["open", "periodic_x", "periodic_xy"] = "open"
    cells: list[tuple[int, int]] = Field(default_factory=lambda: [(-1, -1)])


class AlphaConfig(_Strict):
    start: float = 0.0
    stop: float = 1.0
    points: int = Field(41, ge=2)

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


class DisorderConfig(_Strict):
    w: float = Field(0.0, ge=0.0)
    seeds: list[int] = Field(default_factory=lambda: [0])


class StripConfig(_Strict):
    width: int = Field(48, ge=8)
    height: int = Field(24, ge=8)
    cut: int | None = None


class SweepConfig(_Strict):
    parameter: str
    values: list[float] = Field(default_factory=list)

    @field_validator("parameter")
    @classmethod
    def _path(cls, v):
        head = v.split(".")[0]
        if head not in ("params", "lattice", "disorder", "mu"):
            raise ValueError("sweep parameter must be params.<name>, lattice.<field>, disorder.w or mu")
        return v


class ExperimentConfig(_Strict):
    """One experiment.

    ``mu`` is the reference energy (default 0 for BdG models, the middle of
    the lowest gap otherwise); ``window`` is the switch interval and
    defaults to the middle 60% of the bulk gap around ``mu``.
    """

    version: int = SCHEMA_VERSION
    kind: Literal["spectral-flow", "index", "verify", "bulk-edge", "classify",
                  "zero-modes", "gauge-check"] = "verify"
    model: ModelConfig = Field(default_factory=ModelConfig)
    lattice: LatticeConfig = Field(default_factory=LatticeConfig)
    alpha: AlphaConfig = Field(default_factory=AlphaConfig)
    mu: float | None = None
    window: tuple[float, float] | None = None
    gauge: Literal["ab", "half_line"] = "ab"
    radius: float = Field(6.0, gt=0)
    disorder: DisorderConfig = Field(default_factory=DisorderConfig)
    strip: StripConfig = Field(default_factory=StripConfig)
    sweep: SweepConfig | None = None
    output: str | None = None

    @model_validator(mode="after")
    def _consistent(self):
        if self.window is not None and not self.window[0] < self.window[1]:
            raise ValueError("window must satisfy lo < hi")
        if self.version != SCHEMA_VERSION:
            raise ValueError(f"unsupported config version {self.version}")
        return self


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML config file."""
    text = Path(path).read_text()
    return parse_config(text)


def parse_config(text: str) -> ExperimentConfig:
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ValueError("config must be a mapping")
    return ExperimentConfig.model_validate(data)


def dump_config(cfg: ExperimentConfig) -> str:
    """YAML echo that round-trips through :func:`parse_config`."""
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=True)


def config_schema() -> dict:
    return ExperimentConfig.model_json_schema()
