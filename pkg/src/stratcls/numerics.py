"""Small numerical kernels shared by the solvers.

Everything here works on dense float64 arrays of modest size (a few
dozen dimensions at most).
"""
import math
import warnings

import numpy as np
import scipy.linalg
from scipy.special import ndtri

from .errors import DomainError, NotPSD, Singular

PSD_TOL = 1e-8
PIVOT_TOL = 1e-12


def std_normal_cdf(x):
    """Standard normal CDF, accurate to double precision in both tails."""
    x = float(x)
    if math.isnan(x):
        raise DomainError("cdf argument is NaN")
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def std_normal_pdf(x):
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1)."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile needs 0 < p < 1, got {p!r}")
    x = float(ndtri(p))
    # one Newton polish against our own cdf keeps the pair self-consistent
    dens = std_normal_pdf(x)
    if dens > 1e-300:
        x -= (std_normal_cdf(x) - p) / dens
    return x


def as_symmetric(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"{name} must be square, got shape {M.shape}")
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(M).max(initial=0.0))):
        raise DomainError(f"{name} is not symmetric")
    return 0.5 * (M + M.T)


def psd_eigh(M):
    """Eigen-decomposition of a symmetric PSD matrix with small negative
    eigenvalues clamped to zero."""
    M = as_symmetric(M)
    if M.size == 0:
        return np.zeros(0), np.zeros((0, 0))
    w, V = np.linalg.eigh(M)
    scale = max(1.0, float(np.abs(w).max()))
    if w.min() < -PSD_TOL * scale:
        raise NotPSD(f"matrix has eigenvalue {w.min():.3e} < 0")
    return np.clip(w, 0.0, None), V


def psd_sqrt(M):
    """Symmetric PSD square root S with S @ S == M."""
    w, V = psd_eigh(M)
    S = (V * np.sqrt(w)) @ V.T
    return 0.5 * (S + S.T)


def is_positive_definite(M, tol=1e-10):
    try:
        w, _ = psd_eigh(M)
    except NotPSD:
        return False
    return w.size == 0 or w.min() > tol


def _lu(M):
    # singularity is judged from the pivots by the callers
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        return scipy.linalg.lu_factor(M, check_finite=True)


def linear_solve(M, b):
    """Solve M x = b by LU with partial pivoting.

    Raises Singular when a pivot falls below 1e-12 relative to the largest.
    """
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] != b.shape[0]:
        raise DomainError(f"incompatible shapes {M.shape} and {b.shape}")
    lu, piv = _lu(M)
    pivots = np.abs(np.diag(lu))
    if pivots.size and pivots.min() <= PIVOT_TOL * max(pivots.max(), 1e-300):
        raise Singular("matrix is numerically singular")
    return scipy.linalg.lu_solve((lu, piv), b)


def min_relative_pivot(M) -> float:
    """Smallest LU pivot magnitude divided by the largest (0 for singular)."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 1.0
    lu, _ = _lu(M)
    pivots = np.abs(np.diag(lu))
    top = pivots.max()
    return float(pivots.min() / top) if top > 0 else 0.0
