"""Effort costs and the beta-desirability measure."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, DomainError, SchemaError, ZeroEffort


@dataclass(frozen=True)
class CostModel:
    """Weighted l_p cost ``(sum_f c_f |e_f|^p)^(1/p)``."""

    p: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if not self.p >= 1.0 or not np.isfinite(self.p):
            raise DomainError(f"cost exponent p must be >= 1, got {self.p}")
        if w.ndim != 1 or np.any(~(w > 0)) or not np.all(np.isfinite(w)):
            raise DomainError("cost weights must be finite and strictly positive")

    @classmethod
    def uniform(cls, d: int, p: float = 2.0) -> "CostModel":
        return cls(p, np.ones(d))

    @property
    def d(self) -> int:
        return self.weights.size

    def __call__(self, e) -> float:
        return cost(self, e)

    @classmethod
    def from_dict(cls, data: dict, names: list[str]) -> "CostModel":
        try:
            p = float(data["p"])
            raw = data.get("weights", {})
            unknown = set(raw) - set(names)
            if unknown:
                raise SchemaError(f"cost weights for unknown features: {sorted(unknown)}")
            w = [float(raw.get(n, 1.0)) for n in names]
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"malformed cost model: {exc!r}") from exc
        return cls(p, np.array(w))

    @classmethod
    def load(cls, path, names):
        return cls.from_dict(json.loads(Path(path).read_text()), names)


@dataclass(frozen=True)
class Scenario:
    """Score shortfall ``alpha`` and failure tolerance ``delta``."""

    alpha: float
    delta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")


def cost(model: CostModel, e) -> float:
    e = np.asarray(e, dtype=float)
    if e.shape != model.weights.shape:
        raise DimensionMismatch(f"effort has shape {e.shape}, cost model {model.weights.shape}")
    a = np.abs(e)
    if model.p == 1.0:
        return float(model.weights @ a)
    top = a.max(initial=0.0)
    if top == 0.0:
        return 0.0
    # factor out the largest magnitude so large p cannot overflow
    return float(top * (model.weights @ (a / top) ** model.p) ** (1.0 / model.p))


def beta_of(e, desirable) -> float:
    """Share ``||e_D||_2 / ||e||_2`` of effort placed on desirable features."""
    e = np.asarray(e, dtype=float)
    mask = np.asarray(desirable, dtype=bool)
    if mask.shape != e.shape:
        raise DimensionMismatch("partition mask and effort differ in length")
    top = np.abs(e).max(initial=0.0)
    if top == 0.0:
        raise ZeroEffort("beta is undefined for the zero effort profile")
    e = e / top  # keeps subnormal or huge efforts away from under/overflow
    return float(min(1.0, np.linalg.norm(e[mask]) / np.linalg.norm(e)))


def is_beta_desirable(e, desirable, beta: float) -> bool:
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    return beta_of(e, desirable) >= beta


@dataclass(frozen=True)
class EffortProfile:
    """An effort vector together with the quantities reported about it."""

    effort: np.ndarray
    cost: float
    beta: float | None
    margin: float
    feasible: bool = True

    @classmethod
    def evaluate(cls, e, model: CostModel, desirable, margin: float, feasible=True):
        e = np.asarray(e, dtype=float)
        beta = beta_of(e, desirable) if np.any(e != 0) else None
        return cls(e, cost(model, e), beta, float(margin), feasible)

    def to_dict(self) -> dict:
        return {
            "effort": [float(v) for v in self.effort],
            "cost": self.cost,
            "beta": self.beta,
            "feasible": self.feasible,
            "margin": self.margin,
        }
