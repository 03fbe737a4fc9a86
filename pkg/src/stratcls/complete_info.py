"""Agent best response when the classifier and the graph are known exactly.

With contribution vector ``Ch = C @ h0`` the agent solves

    min cost(e)  s.t.  Ch @ e >= alpha.

For l1 costs a single feature with the best contribution-per-cost ratio is
optimal; for l_p costs with p > 1 effort spreads over every feature in
proportion to ``(|Ch_f| / c_f) ** (1 / (p - 1))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agent import CostModel
from .errors import DimensionMismatch, DomainError, Infeasible


@dataclass(frozen=True)
class SignNormalizedContribution:
    y: np.ndarray
    signs: np.ndarray

    def restore(self, e_nonneg) -> np.ndarray:
        """Map a nonnegative solution back to the original orientation."""
        return self.signs * np.asarray(e_nonneg, dtype=float)


def sign_normalize(Ch) -> SignNormalizedContribution:
    Ch = np.asarray(Ch, dtype=float)
    return SignNormalizedContribution(np.abs(Ch), np.sign(Ch))


def _check(Ch, c):
    Ch = np.asarray(Ch, dtype=float)
    c = np.asarray(c, dtype=float)
    if Ch.ndim != 1 or c.shape != Ch.shape:
        raise DimensionMismatch(f"contribution {Ch.shape} vs cost weights {c.shape}")
    if np.any(~(c > 0)):
        raise DomainError("cost weights must be strictly positive")
    return Ch, c


def bang_per_buck(Ch, c) -> np.ndarray:
    Ch, c = _check(Ch, c)
    return np.abs(Ch) / c


def best_response_l1(Ch, c, alpha: float) -> np.ndarray:
    """Cheapest effort under weighted l1 cost: one feature, the best ratio.

    Ties go to the lowest feature index.
    """
    Ch, c = _check(Ch, c)
    if alpha <= 0:
        return np.zeros_like(Ch)
    norm = sign_normalize(Ch)
    ratio = norm.y / c
    f = int(np.argmax(ratio))  # argmax returns the first maximiser
    if ratio[f] == 0.0:
        raise Infeasible("classifier ignores every feature; no effort can close the gap")
    e = np.zeros_like(Ch)
    e[f] = alpha / norm.y[f]
    return norm.restore(e)


def lp_direction(y, c, p: float) -> np.ndarray:
    """Unnormalised optimal direction ``(y / c) ** (1 / (p - 1))`` for y >= 0,
    computed in log space and scaled so its largest entry is 1."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    nz = y > 0
    if not np.any(nz):
        return out
    logs = (np.log(y[nz]) - np.log(np.asarray(c, dtype=float)[nz])) / (p - 1.0)
    out[nz] = np.exp(logs - logs.max())
    return out


def best_response_lp(Ch, model: CostModel, alpha: float) -> np.ndarray:
    """Cheapest effort under weighted l_p cost with p > 1."""
    Ch, c = _check(Ch, model.weights)
    if not model.p > 1.0:
        raise DomainError("best_response_lp needs p > 1; use best_response_l1")
    if alpha <= 0:
        return np.zeros_like(Ch)
    norm = sign_normalize(Ch)
    u = lp_direction(norm.y, c, model.p)
    gain = float(norm.y @ u)
    if gain == 0.0:
        raise Infeasible("classifier ignores every feature; no effort can close the gap")
    return norm.restore(u * (alpha / gain))


def best_response(Ch, model: CostModel, alpha: float) -> np.ndarray:
    if model.p == 1.0:
        return best_response_l1(Ch, model.weights, alpha)
    return best_response_lp(Ch, model, alpha)


def check_l1_desirability(Ch, c, desirable) -> bool:
    """Some desirable feature beats every undesirable ratio strictly."""
    ratio = bang_per_buck(Ch, c)
    mask = np.asarray(desirable, dtype=bool)
    best_d = ratio[mask].max(initial=0.0)
    best_u = ratio[~mask].max(initial=0.0)
    return bool(best_d > best_u)


def lp_split_norms(Ch, c, p: float, desirable):
    """Return ``(a, b)``, the l2 norms over D and U of ``ratio ** (1/(p-1))``.

    Both are scaled by the same positive constant, which leaves every
    comparison between them unchanged.
    """
    ratio = bang_per_buck(Ch, c)
    mask = np.asarray(desirable, dtype=bool)
    u = lp_direction(ratio, np.ones_like(ratio), p)
    return float(np.linalg.norm(u[mask])), float(np.linalg.norm(u[~mask]))


def check_lp_desirability(Ch, c, p: float, desirable, beta: float) -> bool:
    if not p > 1.0:
        raise DomainError("check_lp_desirability needs p > 1")
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    a, b = lp_split_norms(Ch, c, p, desirable)
    if beta == 1.0:
        return b == 0.0
    return bool(a >= beta / np.sqrt(1.0 - beta * beta) * b)
