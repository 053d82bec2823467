"""Hilbert projective metric, Birkhoff contraction coefficient, KL and L1."""

from __future__ import annotations

import math

import numpy as np

from .errors import LengthMismatch, NonPositiveEntry, ZeroDenominatorWithPositiveMass


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatch(f"shapes {x.shape} and {y.shape} differ")
    return x, y


def hilbert_metric(u, v) -> float:
    """``log(max_i u_i/v_i * max_j v_j/u_j)`` for strictly positive vectors.

    Evaluated through logarithms so that the scale and square-root laws hold to
    rounding error rather than to the error of a ratio of large numbers.
    """
    u, v = _pair(u, v)
    if not (np.all(u > 0) and np.all(v > 0) and np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise NonPositiveEntry("Hilbert metric needs strictly positive finite entries")
    return hilbert_metric_log(np.log(u), np.log(v))


def hilbert_metric_log(log_u, log_v) -> float:
    """Hilbert metric between ``exp(log_u)`` and ``exp(log_v)``."""
    log_u, log_v = _pair(log_u, log_v)
    r = log_u - log_v
    if not np.all(np.isfinite(r)):
        raise NonPositiveEntry("log-vectors must be finite")
    if r.size == 0:
        return 0.0
    return float(r.max() - r.min())


def _log_positive_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("expected a non-empty matrix")
    if not (np.all(A > 0) and np.all(np.isfinite(A))):
        raise NonPositiveEntry("matrix must be strictly positive")
    return np.log(A)


def log_birkhoff_gamma(log_A) -> float:
    """``log gamma(A)`` given ``log A``; usable where ``A`` itself underflows."""
    L = np.asarray(log_A, dtype=np.float64)
    # for every column pair (k, l): max_i (L_ik - L_il) - min_j (L_jk - L_jl)
    diff = L[:, :, None] - L[:, None, :]
    return float((diff.max(axis=0) - diff.min(axis=0)).max())


def birkhoff_gamma(A) -> float:
    """``max A_ik A_jl / (A_jk A_il)`` over all index quadruples (always >= 1)."""
    log_gamma = log_birkhoff_gamma(_log_positive_matrix(A))
    try:
        return math.exp(log_gamma)
    except OverflowError:
        return math.inf


def lambda_from_log_gamma(log_gamma: float) -> float:
    # (sqrt(g) - 1) / (sqrt(g) + 1) == tanh(log(g) / 4)
    return math.tanh(log_gamma / 4.0)


def birkhoff_lambda(A) -> float:
    """Birkhoff contraction ratio ``(sqrt(gamma) - 1) / (sqrt(gamma) + 1)`` in [0, 1)."""
    return lambda_from_log_gamma(log_birkhoff_gamma(_log_positive_matrix(A)))


def kl_divergence(c, d) -> float:
    """``sum_i c_i log(c_i / d_i)`` with the convention ``0 log(0/x) = 0``."""
    c, d = _pair(c, d)
    if np.any(c < 0) or np.any(d < 0):
        raise ValueError("KL arguments must be nonnegative")
    mass = c > 0
    if np.any(d[mass] == 0):
        raise ZeroDenominatorWithPositiveMass("d vanishes where c has mass")
    cm = c[mass]
    return float(np.sum(cm * (np.log(cm) - np.log(d[mass]))))


def l1_distance(x, y) -> float:
    x, y = _pair(x, y)
    return float(np.abs(x - y).sum())
