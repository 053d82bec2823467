"""Induced, primed and half-step plans, marginals, objective and Lagrangian."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Backend, GibbsKernels, SeqOTProblem
from .errors import NumericalUnderflow, WrongChainLength
from .metrics import kl_divergence
from .state import ScalingState, logsumexp, logsumexp_all

ENTROPY_FLOOR = 1e-300


class PlanKind(enum.Enum):
    INDUCED = "induced"
    PRIMED = "primed"
    HALFSTEP = "halfstep"
    ROUNDED = "rounded"
    EXACT = "exact"  # min-cost-flow output, not derived from scalings


@dataclass(frozen=True)
class PlanSet:
    plans: tuple
    kind: PlanKind
    iteration: int

    def __post_init__(self):
        mats = tuple(np.asarray(P, dtype=np.float64) for P in self.plans)
        object.__setattr__(self, "plans", mats)
        object.__setattr__(self, "kind", PlanKind(self.kind))

    @property
    def M(self) -> int:
        return len(self.plans)

    def masses(self) -> list:
        return [float(P.sum()) for P in self.plans]

    def to_json_dict(self) -> dict:
        return {
            "plans": [P.tolist() for P in self.plans],
            "kind": self.kind.value,
            "iteration": int(self.iteration),
            "mass": self.masses(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PlanSet":
        return cls(tuple(np.array(P, dtype=np.float64) for P in d["plans"]), PlanKind(d["kind"]), int(d["iteration"]))


def _require_m2(k: GibbsKernels):
    if k.M != 2:
        raise WrongChainLength(f"primed and half-step plans exist for M=2 only, got M={k.M}")


def log_plans(s: ScalingState, k: GibbsKernels) -> list:
    """Entrywise logarithms of the induced plans (finite even where the plans underflow)."""
    g = s.log_scalings()
    M = k.M
    out = []
    for i in range(M):
        sign = 1.0 if i == M - 1 else -1.0
        out.append(g[i][:, None] + k.log_kernels[i] + sign * g[i + 1][None, :])
    return out


def _linear_plans(s: ScalingState, k: GibbsKernels) -> list:
    u = s.vectors
    M = k.M
    out = []
    for i in range(M):
        right = u[i + 1] if i == M - 1 else 1.0 / u[i + 1]
        P = u[i][:, None] * k.kernels[i] * right[None, :]
        if not np.all(np.isfinite(P)):
            raise NumericalUnderflow(f"plan {i} is not finite in the linear backend")
        out.append(P)
    return out


def plans_from_state(s: ScalingState, k: GibbsKernels) -> PlanSet:
    """Plans ``diag(u_i) K_i diag(1/u_{i+1})``, with ``diag(u_{M+1})`` for the last one."""
    if s.representation is Backend.LINEAR:
        mats = _linear_plans(s, k)
    else:
        mats = [np.exp(L) for L in log_plans(s, k)]
    return PlanSet(tuple(mats), PlanKind.INDUCED, s.n)


def _log_primed(s_prev: ScalingState, mid_next, k: GibbsKernels):
    g = s_prev.log_scalings()
    if s_prev.representation is Backend.LINEAR:
        h = np.log(mid_next)
    else:
        h = np.asarray(mid_next, dtype=np.float64) / s_prev.epsilon
    L1 = g[0][:, None] + k.log_kernels[0] - h[None, :]
    L2 = h[:, None] + k.log_kernels[1] + g[2][None, :]
    return L1, L2


def primed_plans(s_prev: ScalingState, mid_next, k: GibbsKernels) -> PlanSet:
    """Plans built from the edges of ``s_prev`` and the freshly updated middle vector.

    ``mid_next`` is expressed in the same representation as ``s_prev``.
    """
    _require_m2(k)
    if s_prev.representation is Backend.LINEAR:
        u1, _, u3 = s_prev.vectors
        w = np.asarray(mid_next, dtype=np.float64)
        if np.any(w == 0):
            raise NumericalUnderflow("updated middle vector has a zero entry")
        P1 = u1[:, None] * k.kernels[0] / w[None, :]
        P2 = w[:, None] * k.kernels[1] * u3[None, :]
        mats = (P1, P2)
    else:
        mats = tuple(np.exp(L) for L in _log_primed(s_prev, mid_next, k))
    return PlanSet(mats, PlanKind.PRIMED, s_prev.n)


def half_plans(s_prev: ScalingState, mid_next, k: GibbsKernels) -> PlanSet:
    """Primed plans divided by their common mass, so each sums to one."""
    _require_m2(k)
    if s_prev.representation is Backend.LINEAR:
        P1, P2 = primed_plans(s_prev, mid_next, k).plans
        mass = P1.sum()
        if not mass > 0:
            raise NumericalUnderflow("primed plans carry no mass")
        mats = (P1 / mass, P2 / mass)
    else:
        L1, L2 = _log_primed(s_prev, mid_next, k)
        log_mass = logsumexp_all(L1)
        mats = (np.exp(L1 - log_mass), np.exp(L2 - log_mass))
    return PlanSet(mats, PlanKind.HALFSTEP, s_prev.n)


def marginals(ps: PlanSet):
    """``(first edge, last edge, [(cols of plan i, rows of plan i+1), ...])``."""
    P = ps.plans
    pairs = [(P[i].sum(axis=0), P[i + 1].sum(axis=1)) for i in range(len(P) - 1)]
    return P[0].sum(axis=1), P[-1].sum(axis=0), pairs


def halfstep_edge_marginals(s: ScalingState, k: GibbsKernels):
    """Edge marginals of the plans one half update ahead of ``s``.

    These are ``P1 z`` and ``P2^T (1/z)`` with ``z = sqrt(rows(P2) / cols(P1))``
    for the induced plans ``P1, P2`` of ``s``.
    """
    _require_m2(k)
    if s.representation is Backend.LINEAR:
        P1, P2 = _linear_plans(s, k)
        c = P1.sum(axis=0)
        r = P2.sum(axis=1)
        if np.any(c == 0) or np.any(r == 0):
            raise NumericalUnderflow("a boundary marginal has a zero entry")
        z = np.sqrt(r / c)
        return P1 @ z, P2.T @ (1.0 / z)
    L1, L2 = log_plans(s, k)
    log_z = 0.5 * (logsumexp(L2, 1) - logsumexp(L1, 0))
    return np.exp(logsumexp(L1 + log_z[None, :], 1)), np.exp(logsumexp(L2 - log_z[:, None], 0))


def lagrangian_value(s: ScalingState, k: GibbsKernels, p: SeqOTProblem) -> float:
    """Dual objective ``<f_1, a> + <f_{M+1}, b> - eps * sum_i ||P_i||_1``."""
    eps = k.epsilon
    f = s.potentials()
    head = float(f[0] @ p.a + f[-1] @ p.b)
    if s.representation is Backend.LINEAR:
        total = sum(float(P.sum()) for P in _linear_plans(s, k))
    else:
        total = sum(float(np.exp(logsumexp_all(L))) for L in log_plans(s, k))
    return head - eps * total


def lagrangian_gap_kl(s_n: ScalingState, s_next: ScalingState, k: GibbsKernels, p: SeqOTProblem):
    """The two KL terms whose eps-weighted sum equals the Lagrangian increase from n to n+1."""
    _require_m2(k)
    if s_next.n != s_n.n + 1:
        raise ValueError(f"states must be consecutive, got n={s_n.n} and n={s_next.n}")
    a_half, b_half = halfstep_edge_marginals(s_n, k)
    return kl_divergence(p.a, a_half), kl_divergence(p.b, b_half)


def entropy(P) -> float:
    """``-sum P (log P - 1)``; entries below 1e-300 count as zero."""
    P = np.asarray(P, dtype=np.float64)
    mass = P > ENTROPY_FLOOR
    x = P[mass]
    return float(-np.sum(x * (np.log(x) - 1.0)))


def objective(ps: PlanSet, p: SeqOTProblem, epsilon: Optional[float] = None):
    """``(transport cost, regularised cost or None)``."""
    if len(ps.plans) != p.M:
        raise WrongChainLength(f"plan set has {len(ps.plans)} plans, problem has M={p.M}")
    cost = float(sum(np.sum(C * P) for C, P in zip(p.costs, ps.plans)))
    if epsilon is None:
        return cost, None
    return cost, cost - epsilon * sum(entropy(P) for P in ps.plans)
