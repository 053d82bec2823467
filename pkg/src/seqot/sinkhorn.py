"""The scaling iteration, its residuals, the solve loop and the rate/budget diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    TINY,
    Backend,
    Criterion,
    GibbsKernels,
    SeqOTProblem,
    SolveConfig,
    build_kernels,
    compose_min_cost,
    epsilon_from_delta,
    validate_problem,
)
from .errors import (
    DeltaExceedsCostWarning,
    MaxItersExceeded,
    NonPositiveEntry,
    NumericalUnderflow,
    WrongChainLength,
    ZeroKernelEntry,
)
from .metrics import hilbert_metric_log, l1_distance, lambda_from_log_gamma, log_birkhoff_gamma
from .plans import (
    PlanSet,
    half_plans,
    halfstep_edge_marginals,
    lagrangian_value,
    log_plans,
    objective,
    plans_from_state,
)
from .rounding import feasible_pair_m2
from .state import ScalingState, logsumexp, logsumexp_all

__all__ = [
    "ScalingState",
    "ContractionReport",
    "TraceRecord",
    "SolveReport",
    "init_state",
    "step_general",
    "step_m2",
    "step_log_domain",
    "step",
    "boundary_update",
    "halfstep_residual",
    "boundary_residual",
    "solve",
    "contraction_bound",
    "iteration_bound",
]


def init_state(k: GibbsKernels, representation=Backend.LINEAR) -> ScalingState:
    """Edges ``1 / ||K||_1`` (first and last kernel), interior vectors all ones."""
    representation = Backend(representation)
    dims = k.dims
    first = -logsumexp_all(k.log_kernels[0])
    last = -logsumexp_all(k.log_kernels[-1])
    logs = [np.full(dims[0], first)] + [np.zeros(m) for m in dims[1:-1]] + [np.full(dims[-1], last)]
    if representation is Backend.LOG:
        vecs = tuple(k.epsilon * g for g in logs)
    else:
        vecs = tuple(np.exp(g) for g in logs)
    return ScalingState(vecs, 0, representation, k.epsilon)


def _check_kernels(k: GibbsKernels):
    if k.has_underflow():
        raise ZeroKernelEntry(
            f"a Gibbs kernel entry is below {TINY:.3g} at eps={k.epsilon:g}; use the log backend"
        )


def _guarded_div(num, den, what):
    if np.any(den == 0):
        raise NumericalUnderflow(f"{what}: denominator has a zero entry")
    out = num / den
    if not np.all(np.isfinite(out)) or np.any(out == 0) and np.all(num > 0):
        raise NumericalUnderflow(f"{what}: result left the positive normal range")
    return out


def _linear_middle(u, K, idx, M):
    num = K[idx - 1].T @ u[idx - 1]
    right = u[idx + 1] if idx == M - 1 else _guarded_div(1.0, u[idx + 1], "reciprocal")
    den = K[idx] @ right
    return np.sqrt(_guarded_div(num, den, f"boundary {idx}"))


def step_general(s: ScalingState, k: GibbsKernels, p: SeqOTProblem) -> ScalingState:
    """One sweep in the linear representation: every interior vector from the
    previous state, then both edges from the new interior values."""
    if s.representation is not Backend.LINEAR:
        raise ValueError("step_general expects a linear-representation state")
    _check_kernels(k)
    u, K, M = s.vectors, k.kernels, k.M
    new = list(u)
    for idx in range(1, M):
        new[idx] = _linear_middle(u, K, idx, M)
    new[0] = _guarded_div(p.a, K[0] @ _guarded_div(1.0, new[1], "reciprocal"), "first edge")
    new[M] = _guarded_div(p.b, K[M - 1].T @ new[M - 1], "last edge")
    return ScalingState(tuple(new), s.n + 1, Backend.LINEAR, s.epsilon)


def step_m2(s: ScalingState, k: GibbsKernels, p: SeqOTProblem) -> ScalingState:
    if k.M != 2:
        raise WrongChainLength(f"step_m2 needs M=2, got M={k.M}")
    if s.representation is not Backend.LINEAR:
        raise ValueError("step_m2 expects a linear-representation state")
    _check_kernels(k)
    u1, u2, u3 = s.vectors
    K1, K2 = k.kernels
    w = np.sqrt(_guarded_div(K1.T @ u1, K2 @ u3, "middle"))
    v1 = _guarded_div(p.a, K1 @ _guarded_div(1.0, w, "reciprocal"), "first edge")
    v3 = _guarded_div(p.b, K2.T @ w, "last edge")
    return ScalingState((v1, w, v3), s.n + 1, Backend.LINEAR, s.epsilon)


def _log_middle(g, L, idx, M):
    sign = 1.0 if idx == M - 1 else -1.0
    left = logsumexp(g[idx - 1][:, None] + L[idx - 1], 0)
    right = logsumexp(L[idx] + sign * g[idx + 1][None, :], 1)
    return 0.5 * (left - right)


def step_log_domain(s: ScalingState, k: GibbsKernels, p: SeqOTProblem) -> ScalingState:
    """The same sweep on potentials, with every kernel product as a log-sum-exp."""
    if s.representation is not Backend.LOG:
        raise ValueError("step_log_domain expects a log-representation state")
    eps, L, M = s.epsilon, k.log_kernels, k.M
    g = [f / eps for f in s.vectors]
    new = list(g)
    for idx in range(1, M):
        new[idx] = _log_middle(g, L, idx, M)
    new[0] = np.log(p.a) - logsumexp(L[0] - new[1][None, :], 1)
    new[M] = np.log(p.b) - logsumexp(new[M - 1][:, None] + L[M - 1], 0)
    return ScalingState(tuple(eps * x for x in new), s.n + 1, Backend.LOG, eps)


def step(s: ScalingState, k: GibbsKernels, p: SeqOTProblem) -> ScalingState:
    if s.representation is Backend.LOG:
        return step_log_domain(s, k, p)
    if k.M == 2:
        return step_m2(s, k, p)
    return step_general(s, k, p)


def boundary_update(s: ScalingState, k: GibbsKernels) -> np.ndarray:
    """Next middle vector (M=2) in the representation of ``s``; feeds the half-step plans."""
    if k.M != 2:
        raise WrongChainLength("boundary_update is defined for M=2")
    if s.representation is Backend.LINEAR:
        return _linear_middle(s.vectors, k.kernels, 1, 2)
    return s.epsilon * _log_middle(s.log_scalings(), k.log_kernels, 1, 2)


def halfstep_residual(s: ScalingState, k: GibbsKernels, p: SeqOTProblem) -> float:
    """Edge error of the plans half an iteration ahead (M=2 only)."""
    a_half, b_half = halfstep_edge_marginals(s, k)
    return l1_distance(p.a, a_half) + l1_distance(p.b, b_half)


def boundary_residual(s: ScalingState, k: GibbsKernels, p: Optional[SeqOTProblem] = None) -> float:
    """Largest L1 gap between the column sums of plan i and the row sums of plan i+1."""
    if s.representation is Backend.LINEAR:
        P = plans_from_state(s, k).plans
        pairs = [(P[i].sum(axis=0), P[i + 1].sum(axis=1)) for i in range(k.M - 1)]
    else:
        L = log_plans(s, k)
        pairs = [(np.exp(logsumexp(L[i], 0)), np.exp(logsumexp(L[i + 1], 1))) for i in range(k.M - 1)]
    return max(l1_distance(x, y) for x, y in pairs)


def _log_boundary_marginals(s: ScalingState, k: GibbsKernels) -> list:
    L = log_plans(s, k)
    return [(logsumexp(L[i], 0), logsumexp(L[i + 1], 1)) for i in range(k.M - 1)]


def boundary_hilbert(s: ScalingState, k: GibbsKernels) -> list:
    """Hilbert distance between the two sides of every boundary."""
    return [hilbert_metric_log(x, y) for x, y in _log_boundary_marginals(s, k)]


# ---------------------------------------------------------------- diagnostics


@dataclass(frozen=True)
class ContractionReport:
    """Birkhoff ratios of the kernels and the resulting geometric rate.

    The predicted Hilbert bound is ``coefficient * rate ** (multiplier * n + offset)``
    with offset 0 for edge vectors and -1 for the middle vector when M=2.
    ``coefficient`` is only known once reference scalings are supplied.
    """

    lambdas: tuple
    rate: float
    exponent_multiplier: int
    coefficient: Optional[float] = None

    @property
    def M(self) -> int:
        return len(self.lambdas)

    def hilbert_bound(self, n: int, layer: int) -> float:
        if self.coefficient is None:
            raise ValueError("no reference scalings were supplied, coefficient unknown")
        if self.exponent_multiplier == 2 and layer == 1:
            if n < 1:
                return math.inf
            return self.coefficient * self.rate ** (2 * n - 1)
        return self.coefficient * self.rate ** (self.exponent_multiplier * n)

    def boundary_bound(self, n: int) -> float:
        """Hilbert bound on every boundary mismatch at iteration ``n >= 1``."""
        if self.coefficient is None:
            raise ValueError("no reference scalings were supplied, coefficient unknown")
        if n < 1:
            return math.inf
        r = self.rate
        if self.exponent_multiplier == 2:
            return 2 * self.coefficient * (1 + r * r) * r ** (2 * n - 1)
        return 2 * self.coefficient * (1 + r) * r ** (n - 1)


def contraction_bound(k: GibbsKernels, reference=None, init: Optional[ScalingState] = None) -> ContractionReport:
    """Contraction rate of the iteration, plus its coefficient when ``reference`` is given.

    ``reference`` is anything with a ``log_u_hat`` list (see
    :class:`seqot.oracle.ReferenceVectors`) or a list of positive vectors.
    """
    lambdas = tuple(lambda_from_log_gamma(log_birkhoff_gamma(L)) for L in k.log_kernels)
    mult = 2 if k.M == 2 else 1
    coef = None
    if reference is not None:
        ref_logs = _reference_logs(reference)
        start = (init or init_state(k, Backend.LOG)).log_scalings()
        layers = (0, k.M) if k.M == 2 else range(k.M + 1)
        coef = max(hilbert_metric_log(start[i], ref_logs[i]) for i in layers)
    return ContractionReport(lambdas, max(lambdas), mult, coef)


def _reference_logs(reference) -> list:
    if hasattr(reference, "log_u_hat"):
        return list(reference.log_u_hat)
    vecs = [np.asarray(v, dtype=np.float64) for v in reference]
    if any(np.any(v <= 0) for v in vecs):
        raise NonPositiveEntry("reference scalings must be strictly positive")
    return [np.log(v) for v in vecs]


def iteration_bound(k: GibbsKernels, delta_residual: float) -> float:
    """``1 + 4/delta^2 * log(||K1||_1 ||K2||_1 / min_jl (K1 K2)_jl)``, evaluated in logs."""
    if k.M != 2:
        raise WrongChainLength("the iteration budget is stated for M=2")
    if not delta_residual > 0:
        raise ValueError("delta_residual must be positive")
    L1, L2 = k.log_kernels
    log_prod = logsumexp(L1[:, :, None] + L2[None, :, :], 1)
    log_ratio = logsumexp_all(L1) + logsumexp_all(L2) - float(log_prod.min())
    return 1.0 + 4.0 / delta_residual**2 * log_ratio


# ---------------------------------------------------------------- solve loop


@dataclass(frozen=True)
class TraceRecord:
    n: int
    halfstep_residual: Optional[float]
    boundary_residual: float
    lagrangian: float
    hilbert_to_reference: Optional[tuple] = None


@dataclass(frozen=True)
class SolveReport:
    state: ScalingState
    epsilon: float
    threshold: float
    criterion: Criterion
    residual: float
    converged: bool
    induced: PlanSet
    half: Optional[PlanSet]
    rounded: Optional[PlanSet]
    induced_objective: tuple
    rounded_objective: Optional[tuple]
    guarantee: bool  # the delta-suboptimality statement applies
    trace: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.state.n


def _record(s, k, p, ref_logs) -> TraceRecord:
    half = halfstep_residual(s, k, p) if k.M == 2 else None
    hil = None
    if ref_logs is not None:
        logs = s.log_scalings()
        hil = tuple(hilbert_metric_log(x, y) for x, y in zip(logs, ref_logs))
    return TraceRecord(s.n, half, boundary_residual(s, k, p), lagrangian_value(s, k, p), hil)


def resolve_epsilon_threshold(p: SeqOTProblem, cfg: SolveConfig):
    """``(epsilon, threshold, guarantee)`` implied by a config for a given problem."""
    eps = cfg.epsilon
    if eps is None:
        if cfg.delta is None:
            raise ValueError("either epsilon or delta must be given")
        eps = epsilon_from_delta(p, cfg.delta)
    if cfg.residual_tolerance is not None:
        thr = cfg.residual_tolerance
    else:
        if cfg.delta is None or p.M != 2:
            raise ValueError("without delta (or for M > 2) an explicit residual_tolerance is required")
        top = max(p.cost_inf_norms())
        # zero costs: every feasible pair is optimal, any residual will do
        thr = cfg.delta / (16.0 * top) if top > 0 else math.inf
    guarantee = (
        p.M == 2
        and cfg.delta is not None
        and cfg.epsilon is None
        and cfg.residual_tolerance is None
    )
    return float(eps), float(thr), guarantee


def solve(p: SeqOTProblem, cfg: SolveConfig, reference=None, strict: bool = True) -> SolveReport:
    """Iterate until the configured residual drops to the threshold.

    The residual is first checked after one iteration. On budget exhaustion a
    :class:`MaxItersExceeded` carrying the non-converged report is raised, or
    the report is returned when ``strict`` is false.
    """
    validate_problem(p)
    if np.any(p.a <= 0) or np.any(p.b <= 0):
        raise NonPositiveEntry("the scaling iteration needs strictly positive edge marginals")
    if cfg.criterion is Criterion.HALFSTEP and p.M != 2:
        raise WrongChainLength("the half-step residual is defined for M=2; use the boundary criterion")
    eps, thr, guarantee = resolve_epsilon_threshold(p, cfg)
    if p.M == 2 and cfg.delta is not None:
        top = float(compose_min_cost(p)[0].max())
        if cfg.delta >= top:
            warnings.warn(
                f"delta={cfg.delta:g} is not below the composed cost maximum {top:g}",
                DeltaExceedsCostWarning,
                stacklevel=2,
            )

    k = build_kernels(p, eps)
    if cfg.backend is Backend.LINEAR:
        _check_kernels(k)
    ref_logs = _reference_logs(reference) if reference is not None else None
    residual_fn = halfstep_residual if cfg.criterion is Criterion.HALFSTEP else boundary_residual

    s = init_state(k, cfg.backend)
    trace = []
    last_logged = None
    if cfg.trace_every:
        trace.append(_record(s, k, p, ref_logs))
        last_logged = 0
    residual = residual_fn(s, k, p)
    converged = False
    while s.n < cfg.max_iters:
        s = step(s, k, p)
        residual = residual_fn(s, k, p)
        converged = residual <= thr
        if cfg.trace_every and (s.n % cfg.trace_every == 0 or converged):
            trace.append(_record(s, k, p, ref_logs))
            last_logged = s.n
        if converged:
            break
    if cfg.trace_every and last_logged != s.n:
        trace.append(_record(s, k, p, ref_logs))

    induced = plans_from_state(s, k)
    half = rounded = rounded_obj = None
    if p.M == 2:
        half = half_plans(s, boundary_update(s, k), k)
        rounded = feasible_pair_m2(half, p)
        rounded_obj = objective(rounded, p, eps)
    report = SolveReport(
        state=s,
        epsilon=eps,
        threshold=thr,
        criterion=cfg.criterion,
        residual=float(residual),
        converged=converged,
        induced=induced,
        half=half,
        rounded=rounded,
        induced_objective=objective(induced, p, eps),
        rounded_objective=rounded_obj,
        guarantee=guarantee,
        trace=trace,
    )
    if not converged and strict:
        raise MaxItersExceeded(report)
    return report
