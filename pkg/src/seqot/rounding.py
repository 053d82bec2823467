"""Marginal repair: turn nearly feasible plans into exactly feasible ones."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MARGINAL_TOL, SeqOTProblem
from .errors import TargetNotDistribution, WrongChainLength, ZeroMassInput
from .plans import PlanKind, PlanSet


@dataclass(frozen=True)
class RoundingResult:
    rounded: np.ndarray
    l1_change: float
    bound: float  # 2 (||P 1 - a||_1 + ||P^T 1 - b||_1)


def _check_target(name, v):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or np.any(v < 0) or not np.all(np.isfinite(v)) or abs(v.sum() - 1.0) > MARGINAL_TOL:
        raise TargetNotDistribution(f"rounding target {name} is not a probability vector")
    return v


def _shrink(marg, target):
    # rows/cols without mass keep factor 1: nothing to scale
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(marg > 0, target / np.where(marg > 0, marg, 1.0), 1.0)
    return np.minimum(1.0, ratio)


def round_to_feasible(P, a, b) -> RoundingResult:
    """Scale rows down to ``a``, columns down to ``b``, then add back the deficit.

    The deficit is the rank-one matrix ``err_r err_c^T / ||err_r||_1``; both
    errors are nonnegative after the two shrink passes and have equal mass.
    """
    P = np.asarray(P, dtype=np.float64)
    a = _check_target("a", a)
    b = _check_target("b", b)
    if P.shape != (len(a), len(b)):
        raise ValueError(f"plan shape {P.shape} does not match targets ({len(a)}, {len(b)})")
    if np.any(P < 0) or not np.all(np.isfinite(P)):
        raise ValueError("plan must be nonnegative and finite")
    if not P.sum() > 0:
        raise ZeroMassInput("plan has zero total mass")

    Q = P * _shrink(P.sum(axis=1), a)[:, None]
    Q = Q * _shrink(Q.sum(axis=0), b)[None, :]
    err_r = np.maximum(a - Q.sum(axis=1), 0.0)
    err_c = np.maximum(b - Q.sum(axis=0), 0.0)
    deficit = err_r.sum()
    if deficit > 0:
        Q = Q + np.outer(err_r, err_c) / deficit

    bound = 2.0 * (np.abs(P.sum(axis=1) - a).sum() + np.abs(P.sum(axis=0) - b).sum())
    return RoundingResult(Q, float(np.abs(P - Q).sum()), float(bound))


def feasible_pair_m2(half: PlanSet, p: SeqOTProblem) -> PlanSet:
    """Round half-step plans to a pair meeting every chain constraint.

    The boundary is rounded to the half plans' shared marginal, so each plan
    only needs its outer edge repaired.
    """
    if half.M != 2 or p.M != 2:
        raise WrongChainLength("feasible pair rounding is defined for M=2")
    P1, P2 = half.plans
    s = P1.sum(axis=0)
    s = s / s.sum()
    R1 = round_to_feasible(P1, p.a, s).rounded
    R2 = round_to_feasible(P2, s, p.b).rounded
    return PlanSet((R1, R2), PlanKind.ROUNDED, half.iteration)
