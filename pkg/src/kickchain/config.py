"""Run configuration, stored as a JSON document.

Integer-keyed tables (realizations and baseline counts per L) are written
with string keys as JSON requires and converted back on load.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .models import (
    DEFAULT_B, DEFAULT_G, DEFAULT_H_MEAN, DEFAULT_H_STD, DEFAULT_J, DENSE_LIMIT, KFIM, MODELS, TENSOR_RMT,
)
from .entanglement import REAL_GAUSSIAN, VON_NEUMANN
from .ensemble import PLATEAU_SLOPE, EnsembleSpec
from .errors import ParameterError

_INT_TABLES = ("realizations", "baseline_counts", "L1")


@dataclass
class RunConfig:
    models: list = field(default_factory=lambda: [KFIM])
    Ls: list = field(default_factory=lambda: [6, 8, 10])
    J: float = DEFAULT_J
    b: float = DEFAULT_B
    g: float = DEFAULT_G
    h_mean: float = DEFAULT_H_MEAN
    h_std: float = DEFAULT_H_STD
    realizations: dict = field(default_factory=dict)
    baseline_counts: dict = field(default_factory=dict)
    L1: dict = field(default_factory=dict)
    master_seed: int = 0
    out: str = "out"
    bins: str = "fd"
    plateau_slope: float = PLATEAU_SLOPE
    kind: str = VON_NEUMANN
    baseline_ensemble: str = REAL_GAUSSIAN
    store_matrix: bool = True
    store_vectors: bool = False
    max_L: int = DENSE_LIMIT

    def __post_init__(self):
        if isinstance(self.models, str):
            self.models = [self.models]
        self.models = list(self.models)
        for m in self.models:
            if m not in MODELS:
                raise ParameterError(f"unknown model {m!r}; choose from {', '.join(MODELS)}")
        self.Ls = [int(L) for L in self.Ls]
        for name in _INT_TABLES:
            setattr(self, name, {int(k): int(v) for k, v in getattr(self, name).items()})

    @property
    def overrides(self) -> dict:
        return {"J": self.J, "b": self.b, "g": self.g, "h_mean": self.h_mean, "h_std": self.h_std}

    def ensemble_spec(self, model: str) -> EnsembleSpec:
        overrides = self.overrides if model != TENSOR_RMT else {}
        return EnsembleSpec(
            model=model, Ls=tuple(self.Ls), realizations=dict(self.realizations),
            master_seed=self.master_seed, L1=dict(self.L1), baseline_counts=dict(self.baseline_counts),
            overrides=overrides, kind=self.kind, baseline_ensemble=self.baseline_ensemble,
            max_L=self.max_L,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in _INT_TABLES:
            d[name] = {str(k): v for k, v in sorted(d[name].items())}
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.loads(Path(path).read_text())
