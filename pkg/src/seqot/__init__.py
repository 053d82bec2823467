"""Entropic scaling solver for chains of composed transport plans."""

from .core import (
    Backend,
    Criterion,
    GibbsKernels,
    SeqOTProblem,
    SolveConfig,
    build_kernels,
    compose_min_cost,
    epsilon_from_delta,
    load_problem,
    save_problem,
    validate_problem,
)
from .metrics import (
    birkhoff_gamma,
    birkhoff_lambda,
    hilbert_metric,
    kl_divergence,
    l1_distance,
)
from .oracle import ExactSolution, ReferenceVectors, exact_seqot, high_precision_reference, reduce_to_ot
from .plans import (
    PlanKind,
    PlanSet,
    half_plans,
    lagrangian_gap_kl,
    lagrangian_value,
    marginals,
    objective,
    plans_from_state,
    primed_plans,
)
from .rounding import RoundingResult, feasible_pair_m2, round_to_feasible
from .sinkhorn import (
    ContractionReport,
    ScalingState,
    SolveReport,
    TraceRecord,
    boundary_residual,
    boundary_update,
    contraction_bound,
    halfstep_residual,
    init_state,
    iteration_bound,
    solve,
    step,
    step_general,
    step_log_domain,
    step_m2,
)

__version__ = "0.1.0"
