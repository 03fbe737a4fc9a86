"""Classifier-side checks: which classifiers push agents toward good effort.

Membership predicates are evaluated on ``z = C @ h0``. Statements about
convexity in h0-space carry over from z-space only when C has full row
rank, so audits flag a rank-deficient C instead of assuming it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .agent import CostModel, beta_of
from .complete_info import best_response, check_l1_desirability, check_lp_desirability
from .errors import DimensionMismatch, DomainError, PartitionError, PreconditionError
from .numerics import min_relative_pivot

RANK_PIVOT_TOL = 1e-10


def _pnorm(v, r) -> float:
    """``(sum |v|^r)^(1/r)``; r = inf gives the max norm, r < 1 the quasi-norm."""
    a = np.abs(np.asarray(v, dtype=float))
    if a.size == 0:
        return 0.0
    top = a.max()
    if top == 0.0:
        return 0.0
    if np.isinf(r):
        return float(top)
    return float(top * np.sum((a / top) ** r) ** (1.0 / r))


def undesirable_exponent(p: float) -> float:
    """Norm exponent ``2 / (p - 1)`` used on the undesirable block (inf at p = 1)."""
    return np.inf if p == 1.0 else 2.0 / (p - 1.0)


def _contribution(h0, C):
    h0 = np.asarray(h0, dtype=float)
    C = np.asarray(C, dtype=float)
    if h0.ndim != 1 or C.ndim != 2 or C.shape[1] != h0.size:
        raise DimensionMismatch(f"classifier of length {h0.size} vs contribution matrix {C.shape}")
    return h0, C, C @ h0


@dataclass(frozen=True)
class AuditReport:
    classifier: np.ndarray
    achieved_beta: float | None
    desirability_check: bool
    undesirable_norm: float
    witness_notes: list[str] = field(default_factory=list)
    effort: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "classifier": [float(v) for v in self.classifier],
            "achieved_beta": self.achieved_beta,
            "desirability_check": self.desirability_check,
            "undesirable_norm": self.undesirable_norm,
            "witness_notes": list(self.witness_notes),
            "effort": None if self.effort is None else [float(v) for v in self.effort],
        }


def audit_classifier(h0, C, model: CostModel, desirable, beta: float, alpha: float = 1.0) -> AuditReport:
    """Best response to ``h0`` together with the closed-form desirability verdict."""
    h0, C, z = _contribution(h0, C)
    mask = np.asarray(desirable, dtype=bool)
    if mask.shape != z.shape or model.d != z.size:
        raise DimensionMismatch("partition, cost model and classifier disagree in length")
    notes = []
    if C.shape[0] != C.shape[1] or min_relative_pivot(C) <= RANK_PIVOT_TOL:
        notes.append("contribution matrix is rank-deficient; h0-space convexity claims do not transfer")
    if model.p == 1.0:
        verdict = check_l1_desirability(z, model.weights, mask)
    else:
        verdict = check_lp_desirability(z, model.weights, model.p, mask, beta)
    unorm = _pnorm(z[~mask], undesirable_exponent(model.p))
    if alpha <= 0:
        notes.append("alpha <= 0: the agent already passes and exerts zero effort; beta undefined")
        return AuditReport(h0, None, verdict, unorm, notes, np.zeros_like(z))
    e = best_response(z, model, alpha)
    return AuditReport(h0, beta_of(e, mask), verdict, unorm, notes, e)


def membership_single_desirable(h0, C, c, p: float, beta: float, desirable) -> bool:
    """Convex membership test when exactly one feature is desirable."""
    h0, C, z = _contribution(h0, C)
    c = np.asarray(c, dtype=float)
    mask = np.asarray(desirable, dtype=bool)
    if mask.shape != z.shape or c.shape != z.shape:
        raise DimensionMismatch("partition, cost weights and classifier disagree in length")
    if int(mask.sum()) != 1:
        raise PartitionError(f"expected exactly one desirable feature, got {int(mask.sum())}")
    if not 1.0 <= p <= 3.0:
        raise DomainError(f"p must lie in [1, 3], got {p}")
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    if np.any(z < 0):
        raise PreconditionError("membership needs C @ h0 >= 0 entrywise")
    if p == 1.0:
        return check_l1_desirability(z, c, mask)
    fd = int(np.flatnonzero(mask)[0])
    bnorm = _pnorm(z[~mask] / c[~mask], undesirable_exponent(p))
    if beta == 1.0:
        return bnorm == 0.0
    K = c[fd] * (beta / np.sqrt(1.0 - beta * beta)) ** (p - 1.0)
    return bool(K * bnorm - z[fd] <= 0.0)


def membership_undesirable_bounded(h0, C, p: float, gamma: float, desirable) -> bool:
    """``||(C h0)_U||_{2/(p-1)} <= gamma`` (closed set, boundary included)."""
    h0, C, z = _contribution(h0, C)
    mask = np.asarray(desirable, dtype=bool)
    if mask.shape != z.shape:
        raise DimensionMismatch("partition and classifier disagree in length")
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    if not 1.0 < p <= 3.0:
        raise DomainError(f"p must lie in (1, 3], got {p}")
    return _pnorm(z[~mask], undesirable_exponent(p)) <= gamma


@dataclass(frozen=True)
class WitnessRecord:
    case: str
    z_first: tuple
    z_second: tuple
    midpoint: tuple
    memberships: tuple[bool, bool, bool]
    setting: dict

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "z_first": list(self.z_first),
            "z_second": list(self.z_second),
            "midpoint": list(self.midpoint),
            "memberships": list(self.memberships),
            "setting": self.setting,
        }


def nonconvexity_witness(case: str) -> WitnessRecord:
    """Two members of the desirable set whose midpoint is not a member."""
    if case == "l1":
        z1, z2 = np.array([4.0, 7, 3, 6]), np.array([7.0, 4, 3, 6])
        mask = np.array([True, True, False, False])
        c = np.ones(4)
        member = lambda z: check_l1_desirability(z, c, mask)  # noqa: E731
        setting = {"p": 1.0, "desirable": [1, 2], "undesirable": [3, 4], "cost_weights": [1.0] * 4}
    elif case == "lp":
        z1, z2 = np.array([0.0, 1, 1]), np.array([1.0, 0, 1])
        mask = np.array([True, True, False])
        c = np.ones(3)
        beta = 1.0 / np.sqrt(2.0)
        member = lambda z: check_lp_desirability(z, c, 2.0, mask, beta)  # noqa: E731
        setting = {"p": 2.0, "beta": beta, "desirable": [1, 2], "undesirable": [3], "cost_weights": [1.0] * 3}
    else:
        raise DomainError(f"unknown witness case {case!r}; expected 'l1' or 'lp'")
    mid = 0.5 * (z1 + z2)
    flags = (member(z1), member(z2), member(mid))
    as_tuple = lambda v: tuple(float(x) for x in v)  # noqa: E731
    return WitnessRecord(case, as_tuple(z1), as_tuple(z2), as_tuple(mid), flags, setting)
