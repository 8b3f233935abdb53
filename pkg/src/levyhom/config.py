"""Study configuration: a single self-describing JSON file.

The config round-trips losslessly through serialization; its canonical JSON
digest is stamped into every CSV artifact so outputs are traceable to the
exact inputs that produced them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

from .coefficient import (DEFAULT_POSITIVITY_GRID, DEFAULT_TRUNCATION,
                          PeriodicCoefficient, coefficient_from_records)


@dataclass(frozen=True)
class XiGridSpec:
    points_per_dim: int = 16
    radial_min_exp: float = -4.0
    radial_max_exp: float = -0.5
    radial_per_decade: int = 4
    directions: str = "axes+diagonals"

    def validate(self):
        if self.points_per_dim < 1:
            raise ValueError("xi_grid.points_per_dim must be >= 1")
        if self.radial_min_exp >= self.radial_max_exp:
            raise ValueError("xi_grid radial exponents must be increasing")
        if self.radial_per_decade < 1:
            raise ValueError("xi_grid.radial_per_decade must be >= 1")
        if self.directions not in ("axes", "axes+diagonals"):
            raise ValueError("xi_grid.directions must be 'axes' or 'axes+diagonals'")


@dataclass(frozen=True)
class EpsilonSpec:
    """Log-spaced scale parameters for rate studies."""

    min: float = 1e-3
    max: float = 1e-1
    count: int = 12

    def validate(self):
        if not 0.0 < self.min < self.max:
            raise ValueError("epsilons must satisfy 0 < min < max")
        if self.count < 8:
            raise ValueError("epsilon count must be >= 8")

    def values(self):
        import numpy as np

        return np.geomspace(self.max, self.min, self.count)


@dataclass(frozen=True)
class Tolerances:
    oracle_rel: float = 1e-3
    projector_abs: float = 1e-8
    slope_margin: float = 0.1

    def validate(self):
        for name in ("oracle_rel", "projector_abs", "slope_margin"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"tolerances.{name} must be positive")


@dataclass(frozen=True)
class StudyConfig:
    dimension: int = 1
    alpha: float = 0.5
    coefficient: tuple = ()
    truncation: int | None = None
    xi_grid: XiGridSpec = field(default_factory=XiGridSpec)
    epsilons: EpsilonSpec = field(default_factory=EpsilonSpec)
    tolerances: Tolerances = field(default_factory=Tolerances)
    positivity_grid: int | None = None
    seed: int = 0
    output: str = "out"

    def validate(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")
        if not self.coefficient:
            raise ValueError("coefficient mode list must not be empty")
        if self.resolved_truncation < 1:
            raise ValueError("truncation must be >= 1")
        if self.resolved_positivity_grid < 16:
            raise ValueError("positivity_grid must be >= 16")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        self.xi_grid.validate()
        self.epsilons.validate()
        self.tolerances.validate()

    @property
    def resolved_truncation(self) -> int:
        return self.truncation if self.truncation is not None else \
            DEFAULT_TRUNCATION[self.dimension]

    @property
    def resolved_positivity_grid(self) -> int:
        return self.positivity_grid if self.positivity_grid is not None else \
            DEFAULT_POSITIVITY_GRID[self.dimension]

    def build_coefficient(self) -> PeriodicCoefficient:
        return coefficient_from_records(self.dimension, self.coefficient)

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        data = asdict(self)
        data["coefficient"] = [dict(rec) for rec in self.coefficient]
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "StudyConfig":
        known = {
            "dimension", "alpha", "coefficient", "truncation", "xi_grid",
            "epsilons", "tolerances", "positivity_grid", "seed", "output",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(data)
        kwargs["coefficient"] = tuple(
            {"k": list(map(int, rec["k"])), "l": list(map(int, rec["l"])),
             "re": float(rec.get("re", 0.0)), "im": float(rec.get("im", 0.0))}
            for rec in data.get("coefficient", ())
        )
        if "xi_grid" in data:
            kwargs["xi_grid"] = XiGridSpec(**data["xi_grid"])
        if "epsilons" in data:
            kwargs["epsilons"] = EpsilonSpec(**data["epsilons"])
        if "tolerances" in data:
            kwargs["tolerances"] = Tolerances(**data["tolerances"])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "StudyConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "StudyConfig":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:12]
