"""Solver-independent reference for the chance-constrained programs.

Outer bisection on the cost budget ``t``; for each budget an inner
projected-subgradient method minimises the constraint function ``g`` over
the ball ``{cost(e) <= t}``. The smallest budget on which ``g`` reaches
zero is the optimal cost. Nothing here uses the optimality structure the
direct solvers rely on.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .agent import CostModel, cost
from .errors import DimensionMismatch, Infeasible, IterationLimit
from .incomplete_info import ContributionBelief, _require_feasible, probit


def project_l1_ball(v, r):
    """Euclidean projection onto ``{x : ||x||_1 <= r}`` (sort-based)."""
    a = np.abs(v)
    if a.sum() <= r:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    rho = np.nonzero(u * k > css - r)[0][-1]
    theta = (css[rho] - r) / (rho + 1.0)
    return np.sign(v) * np.clip(a - theta, 0.0, None)


def _shrink(y, lam, p):
    """Solve ``z + lam z^(p-1) = y`` for z in [0, y], elementwise (y >= 0)."""
    if p == 3.0:
        return 2.0 * y / (1.0 + np.sqrt(1.0 + 4.0 * lam * y))
    if p == 1.5:
        s = 2.0 * y / (lam + np.sqrt(lam * lam + 4.0 * y))
        return s * s
    if p >= 2.0:
        # convex increasing in z: Newton from the right converges monotonically
        z = y.copy()
        for _ in range(100):
            step = (z + lam * z ** (p - 1) - y) / (1.0 + lam * (p - 1) * z ** (p - 2))
            z = np.clip(z - step, 0.0, None)
            if np.all(np.abs(step) <= 1e-15 * (1.0 + y)):
                break
        return z
    # 1 < p < 2: z = s^(1/(p-1)) makes the equation convex in s
    q = 1.0 / (p - 1.0)
    s = y ** (p - 1.0)
    for _ in range(100):
        step = (s ** q + lam * s - y) / (q * s ** (q - 1.0) + lam)
        s = np.clip(s - step, 0.0, None)
        if np.all(np.abs(step) <= 1e-15 * (1.0 + s)):
            break
    return s ** q


def project_lp_ball(v, r, p):
    """Euclidean projection onto ``{x : ||x||_p <= r}`` for p >= 1."""
    if p == 1.0:
        return project_l1_ball(v, r)
    a = np.abs(v)
    if np.sum(a ** p) <= r ** p:
        return v.copy()
    if p == 2.0:
        return v * (r / np.linalg.norm(v))
    top = a.max()
    y = a / top  # scale-free subproblem, radius r / top
    rr = (r / top) ** p

    def excess(loglam):
        return float(np.sum(_shrink(y, math.exp(loglam), p) ** p) - rr)

    lo, hi = -40.0, 5.0
    while excess(hi) > 0:
        hi += 5.0
    if excess(lo) <= 0:
        # a hair outside the ball: radial scaling is exact to rounding
        return v * (r / np.sum(a ** p) ** (1.0 / p))
    loglam = brentq(excess, lo, hi, xtol=1e-13, rtol=1e-13)
    return np.sign(v) * top * _shrink(y, math.exp(loglam), p)


def dual_norm(v, p):
    """l_q norm of v with 1/p + 1/q = 1."""
    if p == 1.0:
        return float(np.abs(v).max())
    q = p / (p - 1.0)
    top = np.abs(v).max()
    if top == 0:
        return 0.0
    return float(top * np.sum((np.abs(v) / top) ** q) ** (1.0 / q))


class _Problem:
    """``g`` and a subgradient, in coordinates ``u = c^(1/p) * e`` where the
    cost ball becomes an unweighted l_p ball."""

    def __init__(self, belief, model, alpha, delta):
        self.mu = belief.mu
        self.S = belief.sigma_sqrt
        self.Sig = belief.sigma
        self.alpha = alpha
        self.p = probit(delta)
        self.scale = model.weights ** (1.0 / model.p)

    def g(self, u):
        e = u / self.scale
        return self.alpha - self.mu @ e - self.p * np.linalg.norm(self.S @ e)

    def grad(self, u):
        e = u / self.scale
        sd = np.linalg.norm(self.S @ e)
        ge = -self.mu
        if sd > 0 and self.p != 0.0:
            ge = ge - self.p * (self.Sig @ e) / sd
        return ge / self.scale


def _inner(prob, t, p_norm, x0, iters, s0, gtol):
    """Minimise g over the radius-t ball far enough to decide its sign.

    Returns ``(x, g(x), feasible)``. Infeasibility is certified by the
    linearisation bound ``g(x) - grad.x - t ||grad||_*``, a lower bound on g
    over the whole ball because g is convex.
    """
    x = project_lp_ball(x0, t, p_norm)
    best_x, best_g = x, prob.g(x)
    for k in range(1, iters + 1):
        if best_g <= 0:
            return best_x, best_g, True
        gx = prob.g(x)
        gr = prob.grad(x)
        if gx - gr @ x - t * dual_norm(gr, p_norm) > 0:
            return best_x, best_g, False
        gn = np.linalg.norm(gr)
        if gn == 0:
            break
        x_new = project_lp_ball(x - (s0 * t / math.sqrt(k)) * gr / gn, t, p_norm)
        val = prob.g(x_new)
        if val < best_g:
            best_x, best_g = x_new, val
        if np.linalg.norm(x_new - x) <= 1e-15 * t:
            break
        x = x_new
    return best_x, best_g, bool(best_g <= gtol)


def budget_bisection_oracle(belief: ContributionBelief, model: CostModel, alpha: float, delta: float,
                            tol: float = 1e-6, iters: int = 5000, s0: float = 1.0,
                            max_bisections: int = 200) -> np.ndarray:
    """Reference minimiser of ``cost(e)`` subject to ``g(e) <= 0``.

    Returns an effort whose cost is within ``tol * (1 + cost)`` of the
    optimum, up to inner-solver accuracy.
    """
    if model.d != belief.d:
        raise DimensionMismatch(f"cost model of size {model.d} vs belief of size {belief.d}")
    if alpha <= 0:
        return np.zeros(belief.d)
    _require_feasible(belief, alpha, delta)
    prob = _Problem(belief, model, alpha, delta)
    pn = model.p
    gtol = 1e-2 * tol * alpha

    # start along the mean direction; any nonzero point works
    x = belief.mu * prob.scale if np.any(belief.mu) else np.ones(belief.d)
    x = x / np.linalg.norm(x)
    lo, hi = 0.0, alpha / max(float(np.linalg.norm(belief.mu)), 1e-12)
    for _ in range(200):
        sol, val, ok = _inner(prob, hi, pn, x * hi, iters, s0, gtol)
        if ok:
            break
        x = sol / hi
        lo, hi = hi, hi * 2.0
    else:
        raise Infeasible("no budget up to the search limit satisfies the constraint")
    best = sol
    x = sol / hi
    for _ in range(max_bisections):
        if hi - lo <= tol * (1.0 + hi):
            break
        mid = 0.5 * (lo + hi)
        sol, val, ok = _inner(prob, mid, pn, x * mid, iters, s0, gtol)
        if ok:
            hi, best = mid, sol
        else:
            lo = mid
        x = sol / mid
    else:
        raise IterationLimit("budget bisection did not reach the requested tolerance")
    return best / prob.scale


def oracle_cost(belief, model, alpha, delta, **kw) -> float:
    return cost(model, budget_bisection_oracle(belief, model, alpha, delta, **kw))
