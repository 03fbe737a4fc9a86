"""Best responses under Gaussian uncertainty about the contribution vector.

The agent believes ``Ch ~ N(mu, Sigma)`` and needs
``P[Ch @ e >= alpha] >= 1 - delta``. For ``delta <= 1/2`` this is the convex
constraint

    g(e) = alpha - mu @ e - p_delta * ||Sigma^{1/2} e||_2 <= 0,

with ``p_delta`` the standard normal delta-quantile (nonpositive).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import numerics
from .agent import CostModel
from .complete_info import best_response_l1
from .errors import (
    DimensionMismatch,
    DomainError,
    Infeasible,
    NumericalFailure,
    PreconditionError,
    SingularCovariance,
)

MODEL1 = "Model1"
MODEL2_LINEAR = "Model2Linear"
MONTE_CARLO = "MonteCarloApprox"
EXPLICIT = "Explicit"


@dataclass(frozen=True)
class GaussianPrior:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = numerics.as_symmetric(self.covariance, "covariance")
        if cov.shape != (mean.size, mean.size):
            raise DimensionMismatch(f"mean {mean.shape} vs covariance {cov.shape}")
        numerics.psd_eigh(cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @classmethod
    def point(cls, mean) -> "GaussianPrior":
        mean = np.asarray(mean, dtype=float)
        return cls(mean, np.zeros((mean.size, mean.size)))


@dataclass(frozen=True)
class ContributionBelief:
    """Gaussian belief ``N(mu, sigma)`` over the contribution vector ``C h``."""

    mu: np.ndarray
    sigma: np.ndarray
    provenance: str = EXPLICIT
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = numerics.as_symmetric(self.sigma, "sigma")
        if mu.ndim != 1 or sigma.shape != (mu.size, mu.size):
            raise DimensionMismatch(f"mu {mu.shape} vs sigma {sigma.shape}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def d(self) -> int:
        return self.mu.size

    @cached_property
    def eig(self):
        return numerics.psd_eigh(self.sigma)

    @cached_property
    def sigma_sqrt(self) -> np.ndarray:
        return numerics.psd_sqrt(self.sigma)

    @property
    def is_degenerate(self) -> bool:
        w, _ = self.eig
        return w.size == 0 or w.max() <= 1e-14 * max(1.0, float(self.mu @ self.mu))

    def is_diagonal(self, tol=0.0) -> bool:
        off = self.sigma - np.diag(np.diag(self.sigma))
        return bool(np.all(np.abs(off) <= tol))


# -- belief construction ------------------------------------------------------

def belief_model1(C, prior_h: GaussianPrior) -> ContributionBelief:
    """Uncertain classifier, known graph: ``C h`` is an affine image of h."""
    C = np.asarray(C, dtype=float)
    if C.shape != (prior_h.mean.size, prior_h.mean.size):
        raise DimensionMismatch(f"contribution matrix {C.shape} vs prior of size {prior_h.mean.size}")
    return ContributionBelief(C @ prior_h.mean, C @ prior_h.covariance @ C.T, MODEL1)


def edge_design_matrix(graph, h0) -> np.ndarray:
    """Matrix B with ``C(w) h0 = h0 + B w`` on graphs without length-2 paths.

    Column k belongs to edge k (src -> dst) and holds ``h0[dst]`` in row src.
    """
    h0 = np.asarray(h0, dtype=float)
    B = np.zeros((graph.d, len(graph.edges)))
    for k, e in enumerate(graph.edges):
        B[e.src, k] = h0[e.dst]
    return B


def belief_model2_linear(graph, h0, prior_w: GaussianPrior) -> ContributionBelief:
    """Known classifier, Gaussian edge weights, depth-one influence only."""
    from .errors import DepthExceeded
    from .graph import max_path_length

    h0 = np.asarray(h0, dtype=float)
    if h0.size != graph.d:
        raise DimensionMismatch(f"classifier of length {h0.size} vs {graph.d} features")
    if prior_w.mean.size != len(graph.edges):
        raise DimensionMismatch(f"weight prior of size {prior_w.mean.size} vs {len(graph.edges)} edges")
    if max_path_length(graph) >= 2:
        raise DepthExceeded(
            "graph has an influence path of length >= 2; C(w) h0 is not Gaussian, use belief_monte_carlo"
        )
    B = edge_design_matrix(graph, h0)
    return ContributionBelief(h0 + B @ prior_w.mean, B @ prior_w.covariance @ B.T, MODEL2_LINEAR)


def _batched_contribution(graph, weights):
    """Contribution matrices for a batch of edge-weight vectors, shape (n, d, d)."""
    n = weights.shape[0]
    d = graph.d
    A = np.zeros((n, d, d))
    for k, e in enumerate(graph.edges):
        A[:, e.src, e.dst] = weights[:, k]
    C = np.broadcast_to(np.eye(d), (n, d, d)).copy()
    P = C.copy()
    for _ in range(d):
        P = P @ A
        if not np.any(P):
            break
        C += P
    return C


@dataclass(frozen=True)
class Model2Sampler:
    """Known classifier ``h0``, Gaussian edge weights, any DAG depth."""

    graph: object
    h0: np.ndarray
    prior_w: GaussianPrior

    def sample(self, rng, n):
        w = rng.multivariate_normal(self.prior_w.mean, self.prior_w.covariance, size=n, method="eigh")
        return np.einsum("nij,j->ni", _batched_contribution(self.graph, w), np.asarray(self.h0, float))


@dataclass(frozen=True)
class Model3Sampler:
    """Gaussian classifier and Gaussian edge weights, drawn independently."""

    graph: object
    prior_h: GaussianPrior
    prior_w: GaussianPrior

    def sample(self, rng, n):
        w = rng.multivariate_normal(self.prior_w.mean, self.prior_w.covariance, size=n, method="eigh")
        h = rng.multivariate_normal(self.prior_h.mean, self.prior_h.covariance, size=n, method="eigh")
        return np.einsum("nij,nj->ni", _batched_contribution(self.graph, w), h)


def belief_monte_carlo(sampler, n: int, seed) -> ContributionBelief:
    """Moment-matched Gaussian fitted to ``n`` draws of ``C(w) h``."""
    if n < 1000:
        raise DomainError("belief_monte_carlo needs at least 1000 samples")
    rng = np.random.default_rng(seed)
    draws = sampler.sample(rng, n)
    mu = draws.mean(axis=0)
    sigma = np.cov(draws, rowvar=False).reshape(mu.size, mu.size)
    return ContributionBelief(mu, sigma, MONTE_CARLO, {"n": n, "stderr": draws.std(axis=0, ddof=1) / math.sqrt(n)})


# -- the chance constraint ------------------------------------------------------

def probit(delta: float) -> float:
    """``p_delta``, the delta-quantile of N(0, 1); requires delta in (0, 1/2]."""
    if not 0.0 < delta <= 0.5:
        raise DomainError(f"delta must lie in (0, 0.5], got {delta}")
    if delta == 0.5:
        return 0.0
    return numerics.std_normal_quantile(delta)


def _sd(belief, e):
    return float(np.linalg.norm(belief.sigma_sqrt @ e))


def chance_margin(belief: ContributionBelief, e, alpha: float, delta: float) -> float:
    """``g(e)``; the effort passes with probability >= 1 - delta iff g(e) <= 0."""
    e = np.asarray(e, dtype=float)
    if e.shape != belief.mu.shape:
        raise DimensionMismatch(f"effort of length {e.size} vs belief of size {belief.d}")
    return float(alpha - belief.mu @ e - probit(delta) * _sd(belief, e))


def pass_probability(belief: ContributionBelief, e, alpha: float) -> float:
    """Exact ``P[Ch @ e >= alpha]`` under the Gaussian belief."""
    e = np.asarray(e, dtype=float)
    mean = float(belief.mu @ e)
    sd = _sd(belief, e)
    if sd == 0.0:
        return 1.0 if mean >= alpha else 0.0
    return 1.0 - numerics.std_normal_cdf((alpha - mean) / sd)


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    threshold_delta: float
    norm_value: float

    def to_dict(self):
        return {"feasible": self.feasible, "threshold_delta": self.threshold_delta, "norm_value": self.norm_value}


def _whitened_norm(belief):
    """Return ``(||Sigma^{+1/2} mu||, ||mu outside range(Sigma)||)``."""
    w, V = belief.eig
    m = V.T @ belief.mu
    cut = 1e-10 * max(float(w.max(initial=0.0)), 1e-300)
    rng = w > cut
    whitened = math.sqrt(float(np.sum(m[rng] ** 2 / w[rng])))
    null = float(np.linalg.norm(m[~rng]))
    return whitened, null


def _verdict(delta, threshold, norm_value):
    # at the threshold itself the infimum of g is alpha > 0 and is not attained
    return FeasibilityVerdict(bool(delta > threshold), threshold, norm_value)


def feasibility(belief: ContributionBelief, alpha: float, delta: float) -> FeasibilityVerdict:
    """Feasibility of the chance constraint for positive-definite ``sigma``.

    The program is feasible exactly when ``delta`` exceeds
    ``Phi(-||sigma^{-1/2} mu||_2)``.
    """
    w, _ = belief.eig
    if w.size == 0 or w.min() <= 1e-10:
        raise SingularCovariance("feasibility needs a positive-definite covariance; see feasibility_psd")
    probit(delta)
    norm_value, _ = _whitened_norm(belief)
    threshold = numerics.std_normal_cdf(-norm_value)
    if alpha <= 0:
        return FeasibilityVerdict(True, threshold, norm_value)
    return _verdict(delta, threshold, norm_value)


def feasibility_psd(belief: ContributionBelief, alpha: float, delta: float) -> FeasibilityVerdict:
    """Feasibility for any PSD ``sigma``.

    A mean component outside the range of ``sigma`` is a riskless direction,
    so every delta works (threshold 0). Otherwise the positive-definite rule
    applies on the range of ``sigma`` with the pseudo-inverse.
    """
    probit(delta)
    norm_value, null = _whitened_norm(belief)
    scale = float(np.linalg.norm(belief.mu))
    if alpha <= 0:
        return FeasibilityVerdict(True, 0.0, norm_value)
    if scale == 0.0:
        return FeasibilityVerdict(False, 0.5, 0.0)
    if null > 1e-9 * scale:
        return FeasibilityVerdict(True, 0.0, math.inf)
    return _verdict(delta, numerics.std_normal_cdf(-norm_value), norm_value)


def _require_feasible(belief, alpha, delta):
    verdict = feasibility_psd(belief, alpha, delta)
    if not verdict.feasible:
        raise Infeasible(
            f"no effort passes with probability {1 - delta:g}; need delta > {verdict.threshold_delta:.6g}",
            verdict.threshold_delta,
        )
    return verdict


# -- l2 cost: one-dimensional search over the KKT family -------------------------

def _bisect_log(fn, t_lo, t_hi, rtol=1e-12, max_iter=200):
    """Root of fn on [t_lo, t_hi] with fn(t_lo) < 0 < fn(t_hi), bisecting log t."""
    a, b = math.log(t_lo), math.log(t_hi)
    for _ in range(max_iter):
        if b - a <= rtol:
            break
        m = 0.5 * (a + b)
        if fn(math.exp(m)) < 0:
            a = m
        else:
            b = m
    return math.exp(0.5 * (a + b))


def _kkt_search(m, w, p, alpha):
    """Solve the l2 program in a basis where ``sigma = diag(w)``.

    Directions ``d(t) = m / (1 + t w)``; returns the effort in that basis.
    The optimal t is the root of ``t * phi(d) * ||sigma^{1/2} d|| - |p| * ||d||^2``
    where ``phi(d) = m @ d + p ||sigma^{1/2} d||``.
    """
    def parts(t):
        d = m / (1.0 + t * w)
        sd = math.sqrt(max(float(w @ (d * d)), 0.0))
        return d, sd, float(m @ d) + p * sd

    def residual(t):
        d, sd, phi = parts(t)
        return t * phi * sd + p * float(d @ d)

    wmax = float(w.max())
    cut = 1e-10 * wmax
    null = w <= cut
    if np.any(null) and np.linalg.norm(m[null]) > 1e-9 * np.linalg.norm(m):
        # riskless directions exist; the t -> inf limit is optimal when the
        # risky part of mu cannot pay for its own uncertainty
        risky = math.sqrt(float(np.sum(m[~null] ** 2 / w[~null])))
        if risky <= -p:
            d = np.where(null, m, 0.0)
            return d * (alpha / float(m @ d))

    t_hi = 1e6 / wmax
    for _ in range(4):
        if residual(t_hi) > 0:
            break
        t_hi *= 10.0
    else:
        raise NumericalFailure("could not bracket the KKT root of the l2 chance-constrained program")
    t_lo = t_hi * 1e-16
    while residual(t_lo) >= 0:
        t_lo *= 1e-8
        if t_lo < 1e-300:
            raise NumericalFailure("could not bracket the KKT root from below")
    t = _bisect_log(residual, t_lo, t_hi)
    d, _, phi = parts(t)
    if not phi > 0:
        raise NumericalFailure("KKT search ended on an infeasible direction")
    return d * (alpha / phi)


def _closed_form_mean(mu, alpha):
    nrm2 = float(mu @ mu)
    if nrm2 == 0.0:
        raise Infeasible("mean contribution is zero; no effort can close the gap", 0.5)
    return mu * (alpha / nrm2)


def stationarity_residual(belief, e, alpha, delta) -> float:
    """Norm of ``e/||e|| - lam (p Sigma e / ||Sigma^{1/2} e|| + mu)`` at ``lam = ||e|| / alpha``."""
    e = np.asarray(e, dtype=float)
    p = probit(delta)
    ne = float(np.linalg.norm(e))
    sd = _sd(belief, e)
    lam = ne / alpha
    risk = p * (belief.sigma @ e) / sd if sd > 0 else 0.0
    return float(np.linalg.norm(e / ne - lam * (risk + belief.mu)))


def kkt_multipliers(belief, e, alpha, delta):
    """``(k1, k2, lam)`` with ``e = lam (k1 I + k2 Sigma)^{-1} mu`` at an l2 optimum."""
    e = np.asarray(e, dtype=float)
    ne = float(np.linalg.norm(e))
    lam = ne / alpha
    sd = _sd(belief, e)
    k2 = -lam * probit(delta) / sd if sd > 0 else 0.0
    return 1.0 / ne, k2, lam


def best_response_chance_l2(belief: ContributionBelief, alpha: float, delta: float, check=True) -> np.ndarray:
    """Minimum-l2-norm effort meeting the chance constraint.

    Searches the one-parameter family ``(I + t Sigma)^{-1} mu`` for the
    member whose constraint-activating rescaling is a KKT point.
    """
    p = probit(delta)
    if alpha <= 0:
        return np.zeros(belief.d)
    _require_feasible(belief, alpha, delta)
    if p == 0.0 or belief.is_degenerate:
        return _closed_form_mean(belief.mu, alpha)
    w, V = belief.eig
    e = V @ _kkt_search(V.T @ belief.mu, w, p, alpha)
    if check:
        _check_l2_solution(belief, e, alpha, delta)
    return e


def best_response_chance_l2_diag(belief: ContributionBelief, alpha: float, delta: float, check=True) -> np.ndarray:
    """Same program for diagonal ``sigma``; per-feature closed form
    ``mu_f / (k1 + k2 sigma_f)`` once the scalar ratio is found."""
    if not belief.is_diagonal():
        raise PreconditionError("best_response_chance_l2_diag needs a diagonal covariance")
    p = probit(delta)
    if alpha <= 0:
        return np.zeros(belief.d)
    _require_feasible(belief, alpha, delta)
    s = np.diag(belief.sigma).copy()
    if p == 0.0 or belief.is_degenerate:
        return _closed_form_mean(belief.mu, alpha)
    e = _kkt_search(belief.mu, s, p, alpha)
    if check:
        _check_l2_solution(belief, e, alpha, delta)
    return e


def _check_l2_solution(belief, e, alpha, delta):
    g = chance_margin(belief, e, alpha, delta)
    if abs(g) > 1e-8 * max(1.0, abs(alpha)):
        raise NumericalFailure(f"constraint not active at the l2 solution (g = {g:.3e})")
    if _sd(belief, e) > 0:
        res = stationarity_residual(belief, e, alpha, delta)
        if res > 1e-6:
            raise NumericalFailure(f"KKT stationarity residual {res:.3e} exceeds 1e-6")


def check_beta_condition_diag(belief: ContributionBelief, desirable, beta: float) -> bool:
    """Sufficient condition for a beta-desirable l2 response when every
    feature carries the same variance."""
    if not belief.is_diagonal(tol=1e-12):
        raise PreconditionError("covariance is not diagonal")
    s = np.diag(belief.sigma)
    if s.size and np.ptp(s) > 1e-9:
        raise PreconditionError("features do not share a common variance")
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    mask = np.asarray(desirable, dtype=bool)
    a = float(np.linalg.norm(belief.mu[mask]))
    b = float(np.linalg.norm(belief.mu[~mask]))
    if beta == 1.0:
        return b == 0.0
    return a >= beta / math.sqrt(1.0 - beta * beta) * b


# -- l1 cost -----------------------------------------------------------------

def best_response_chance_l1(belief: ContributionBelief, c, alpha: float, delta: float,
                            certify=True, rtol=1e-4) -> np.ndarray:
    """Minimum weighted-l1 effort meeting the chance constraint.

    Solved as a second-order cone program, rescaled so the constraint is
    exactly active, and (by default) cross-checked against
    :func:`stratcls.oracle.budget_bisection_oracle`.
    """
    import cvxpy as cp

    c = np.asarray(c, dtype=float)
    if c.shape != belief.mu.shape:
        raise DimensionMismatch(f"cost weights {c.shape} vs belief {belief.mu.shape}")
    p = probit(delta)
    if alpha <= 0:
        return np.zeros(belief.d)
    _require_feasible(belief, alpha, delta)
    if p == 0.0 or belief.is_degenerate:
        return best_response_l1(belief.mu, c, alpha)

    # normalise so the solver sees O(1) data
    scale = float(np.abs(belief.mu).max() + np.abs(belief.sigma_sqrt).max())
    e = cp.Variable(belief.d)
    cons = [belief.mu / scale @ e + p * cp.norm(belief.sigma_sqrt / scale @ e, 2) >= 1.0]
    prob = cp.Problem(cp.Minimize(c @ cp.abs(e)), cons)
    try:
        prob.solve(solver=cp.CLARABEL)
    except cp.error.SolverError as exc:
        raise NumericalFailure(f"conic solver failed: {exc}") from exc
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or e.value is None:
        raise NumericalFailure(f"conic solver returned status {prob.status}")
    raw = np.asarray(e.value, dtype=float)

    def activate(v):
        gain = float(belief.mu @ v + p * _sd(belief, v))
        return v * (alpha / gain) if gain > 0 else None

    sol = activate(raw)
    if sol is None:
        raise NumericalFailure("conic solver returned a point that does not meet the constraint")
    # interior-point noise leaves tiny nonzeros; drop them if that costs nothing
    trimmed = np.where(c * np.abs(raw) < 1e-7 * float(c @ np.abs(raw)), 0.0, raw)
    trimmed = activate(trimmed)
    if trimmed is not None and c @ np.abs(trimmed) <= (c @ np.abs(sol)) * (1 + 1e-7):
        sol = trimmed
    if certify:
        from .oracle import budget_bisection_oracle

        ref = budget_bisection_oracle(belief, CostModel(1.0, c), alpha, delta, tol=rtol * 1e-2)
        ours, theirs = float(c @ np.abs(sol)), float(c @ np.abs(ref))
        if ours > theirs * (1 + rtol) or theirs > ours * (1 + rtol) + rtol * 1e-2 * (1 + theirs):
            raise NumericalFailure(f"l1 solution cost {ours:.8g} disagrees with oracle {theirs:.8g}")
    return sol


# -- Model 3 Monte-Carlo demonstration ------------------------------------------

@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    n: int


def mc_pass_probability_model3(e: float, alpha: float, n: int = 10**6, seed=0) -> MCEstimate:
    """Monte-Carlo estimate of ``P[omega * h * e >= alpha]`` with
    independent standard normal ``omega`` and ``h``."""
    if n < 10**5:
        raise DomainError("mc_pass_probability_model3 needs n >= 1e5")
    if e == 0:
        return MCEstimate(1.0 if 0.0 >= alpha else 0.0, 0.0, n)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((2, n))
    hits = np.count_nonzero(z[0] * z[1] * e >= alpha)
    f = hits / n
    return MCEstimate(f, math.sqrt(max(f * (1 - f), 0.0) / n), n)


@dataclass(frozen=True)
class NonConcavityWitness:
    e1: float
    e2: float
    f1: MCEstimate
    f2: MCEstimate
    f_mid: MCEstimate
    gap: float
    combined_se: float

    @property
    def z_score(self) -> float:
        return self.gap / self.combined_se if self.combined_se > 0 else math.inf


def find_nonconcavity(alpha=1.0, e_max=2.0, points=40, n=10**6, seed=0) -> NonConcavityWitness:
    """Scan ``f(e) = P[omega h e >= alpha]`` on a uniform grid over (0, e_max]
    and return the pair whose midpoint falls furthest below the chord,
    measured in combined standard errors."""
    ss = np.random.SeedSequence(seed)
    grid = e_max * np.arange(1, points + 1) / points
    children = ss.spawn(points)
    est = [mc_pass_probability_model3(float(x), alpha, n, child) for x, child in zip(grid, children)]
    best = None
    for i in range(points):
        for j in range(i + 2, points, 2):
            k = (i + j) // 2
            gap = 0.5 * (est[i].value + est[j].value) - est[k].value
            se = math.sqrt(est[k].stderr ** 2 + 0.25 * (est[i].stderr ** 2 + est[j].stderr ** 2))
            z = gap / se if se > 0 else (math.inf if gap > 0 else -math.inf)
            if best is None or z > best[0]:
                best = (z, NonConcavityWitness(float(grid[i]), float(grid[j]), est[i], est[j], est[k], gap, se))
    return best[1]
