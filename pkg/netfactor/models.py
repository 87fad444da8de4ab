from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Variant(str, Enum):
    """Factorization algorithm; the value is the CLI/report spelling."""

    plain = "nmf"
    whole = "nnmf"
    community = "cnmf"
    degree = "dnmf"
    tree = "tnmf"

    @property
    def label(self) -> str:
        return self.value.upper()


class Termination(str, Enum):
    max_iter_reached = "max_iter_reached"
    stationary = "stationary"


class DegreeGradient(str, Enum):
    # Symbolic derivative of the degree-matching cost.
    exact = "exact"
    # H1 term with coefficient α and AAᵀ1 term with 2α.
    scaled = "scaled"


class Protocol(str, Enum):
    convergence = "convergence"
    community = "community"
    degree = "degree"
    tree = "tree"
    clustering = "clustering"
    recommendation = "recommendation"


class FactorConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    k: int = Field(ge=1)
    alpha: float = Field(default=0.1, ge=0.0)
    # Weight of the second horizontal network (X side). None means "same as alpha".
    alpha2: float | None = Field(default=None, ge=0.0)
    max_iter: int = Field(default=10000, ge=1)
    sigma: float = Field(default=1e-9, gt=0.0)
    delta: float = Field(default=1e-9, gt=0.0)
    stop_tol: float = Field(default=1e-10, gt=0.0)
    seed: int = Field(default=0, ge=0)
    eta_cap: float = Field(default=1e6, gt=0.0)
    max_backtracks: int = Field(default=30, ge=0)
    degree_gradient: DegreeGradient = DegreeGradient.exact

    @property
    def second_alpha(self) -> float:
        return self.alpha if self.alpha2 is None else float(self.alpha2)


FACTOR_CONFIG_FIELDS = frozenset(FactorConfig.model_fields)


class PairCounts(BaseModel):
    """
    Pair-counting agreement between a benchmark and a clustering:
      a: same cluster in both
      b: same cluster in the benchmark, different in the clustering
      c: different in the benchmark, same in the clustering
    """

    model_config = ConfigDict(frozen=True)

    a: int = Field(ge=0)
    b: int = Field(ge=0)
    c: int = Field(ge=0)


class ExperimentSpec(BaseModel):
    """
    One experiment run. Parsed from a flat JSON object: FactorConfig keys
    (alpha, max_iter, seed, ...) sit next to the experiment keys and are
    lifted into `cfg` here.
    """

    model_config = ConfigDict(extra="forbid")

    name: str | None = None
    protocol: Protocol
    trials: int = Field(default=100, ge=1)
    n: int = Field(ge=2)
    p: int = Field(ge=1)
    k: int = Field(ge=1)
    cfg: FactorConfig
    variants: list[Variant] = Field(min_length=1)
    output_path: Path = Path("out")

    # Synthetic generator knobs.
    density: float = Field(default=1.0, gt=0.0, le=1.0)
    clusters: int = Field(default=5, ge=1)
    n_test: int = Field(default=100, ge=1)
    # Latent dimensions swept by the convergence protocol.
    convergence_ks: list[int] = Field(default_factory=lambda: [10, 100, 1000])
    kmeans_restarts: int = Field(default=10, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _lift_flat_config(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        if "out" in data and "output_path" not in data:
            data["output_path"] = data.pop("out")
        cfg = dict(data.get("cfg") or {})
        for key in list(data.keys()):
            if key in FACTOR_CONFIG_FIELDS and key != "k":
                cfg[key] = data.pop(key)
        if "k" in data:
            cfg["k"] = data["k"]
        data["cfg"] = cfg
        return data

    @model_validator(mode="after")
    def _check_dimensions(self) -> "ExperimentSpec":
        if self.cfg.k != self.k:
            raise ValueError(f"cfg.k={self.cfg.k} disagrees with k={self.k}")
        if self.protocol != Protocol.convergence and self.k > min(self.n, self.p):
            raise ValueError(f"k={self.k} exceeds min(n, p)={min(self.n, self.p)}")
        if self.protocol == Protocol.clustering and self.clusters > self.n:
            raise ValueError(f"clusters={self.clusters} exceeds n={self.n}")
        if self.protocol == Protocol.recommendation and self.n_test >= self.n * self.p:
            raise ValueError(f"n_test={self.n_test} leaves no training entries")
        return self

    def with_overrides(self, **overrides: Any) -> "ExperimentSpec":
        data = self.model_dump(mode="json")
        cfg = data.pop("cfg")
        data.update(cfg)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentSpec.model_validate(data)
