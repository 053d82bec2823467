"""Command-line front end: ``seqot {solve,trace,oracle,gen}``.

Exit codes: 0 ok, 1 input error, 2 not converged, 3 instance too large for the oracle.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import SeqOTProblem, SolveConfig, build_kernels, load_problem, save_problem
from .errors import MaxItersExceeded, ReferenceNotConverged, ScaleExceeded
from .oracle import exact_seqot, high_precision_reference, reduce_to_ot
from .serialize import dumps, fmt_float
from .sinkhorn import contraction_bound, resolve_epsilon_threshold, solve

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_SCALE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 means "not converged" here
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


@dataclass
class RunManifest:
    problem: str
    config: dict
    epsilon: float
    threshold: float
    n: int
    converged: bool
    residual: float
    objective: Optional[float]
    regularized_objective: Optional[float]
    guarantee: bool
    oracle_optimum: Optional[float] = None
    report_path: Optional[str] = None
    trace_path: Optional[str] = None


def _config_from_args(args) -> SolveConfig:
    return SolveConfig(
        epsilon=args.epsilon,
        delta=args.delta,
        max_iters=args.max_iters,
        criterion=args.criterion,
        backend=args.backend,
        residual_tolerance=args.tolerance,
        trace_every=args.trace_every,
    )


def _trace_csv(report, p: SeqOTProblem, reference=None) -> str:
    cols = ["n", "halfstep_residual", "boundary_residual", "lagrangian"]
    bounds = None
    if reference is not None:
        layers = range(1, p.M + 2)
        cols += [f"hilbert_{i}" for i in layers] + [f"bound_{i}" for i in layers]
        bounds = contraction_bound(build_kernels(p, report.epsilon), reference)
    lines = [",".join(cols)]
    for r in report.trace:
        row = [str(r.n), "" if r.halfstep_residual is None else fmt_float(r.halfstep_residual)]
        row += [fmt_float(r.boundary_residual), fmt_float(r.lagrangian)]
        if bounds is not None:
            row += [fmt_float(h) for h in r.hilbert_to_reference]
            row += [fmt_float(bounds.hilbert_bound(r.n, i)) for i in range(p.M + 1)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _run_one(path: str, args):
    """Solve one problem file; returns (exit code, manifest or None, report or None, problem, reference)."""
    p = load_problem(path)
    cfg = _config_from_args(args)
    reference = None
    if getattr(args, "reference", False):
        eps, _, _ = resolve_epsilon_threshold(p, cfg)
        reference = high_precision_reference(p, eps)
    try:
        report = solve(p, cfg, reference=reference)
        code = EXIT_OK
    except MaxItersExceeded as exc:
        report = exc.report
        code = EXIT_NOT_CONVERGED
    rounded = report.rounded_objective
    manifest = RunManifest(
        problem=str(path),
        config={
            "epsilon": cfg.epsilon,
            "delta": cfg.delta,
            "criterion": cfg.criterion.value,
            "backend": cfg.backend.value,
            "max_iters": cfg.max_iters,
            "residual_tolerance": cfg.residual_tolerance,
        },
        epsilon=report.epsilon,
        threshold=report.threshold,
        n=report.n,
        converged=report.converged,
        residual=report.residual,
        objective=None if rounded is None else rounded[0],
        regularized_objective=None if rounded is None else rounded[1],
        guarantee=report.guarantee,
    )
    if getattr(args, "oracle", False):
        manifest.oracle_optimum = exact_seqot(p).optimum
    return code, manifest, report, p, reference


def _default_out(path: str, out_dir: Optional[str], suffix: str) -> Path:
    base = Path(out_dir) if out_dir else Path(path).parent
    return base / (Path(path).stem + suffix)


def _solve_and_write(path: str, args) -> int:
    code, manifest, report, p, reference = _run_one(path, args)
    single = len(args.problems) == 1
    report_path = Path(args.out) if (args.out and single) else _default_out(path, args.out_dir, ".report.json")
    trace_path = Path(args.trace) if (args.trace and single) else _default_out(path, args.out_dir, ".trace.csv")
    manifest.report_path = str(report_path)
    manifest.trace_path = str(trace_path)
    plans = report.rounded if report.rounded is not None else report.induced
    doc = {"manifest": asdict(manifest), "plans": plans.to_json_dict()}
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(dumps(doc) + "\n")
    trace_path.parent.mkdir(parents=True, exist_ok=True)
    with open(trace_path, "w", newline="\n") as fh:
        fh.write(_trace_csv(report, p, reference))
    status = "converged" if report.converged else "NOT converged"
    obj = "n/a" if manifest.objective is None else f"{manifest.objective:.10g}"
    print(f"{path}: {status} at n={report.n}, objective {obj}, report {report_path}")
    return code


def cmd_solve(args) -> int:
    if len(args.problems) == 1 or args.jobs <= 1:
        codes = [_solve_and_write(path, args) for path in args.problems]
    else:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(lambda q: _solve_and_write(q, args), args.problems))
    return max(codes)


def cmd_trace(args) -> int:
    code, _, report, p, reference = _run_one(args.problem, args)
    text = _trace_csv(report, p, reference)
    if args.trace:
        with open(args.trace, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def cmd_oracle(args) -> int:
    p = load_problem(args.problem)
    sol = exact_seqot(p)
    doc = {"optimum": sol.optimum, "plans": sol.plans.to_json_dict()}
    if p.M == 2:
        reduced, _ = reduce_to_ot(p)
        doc["reduce_to_ot_optimum"] = reduced
        doc["cross_check_delta"] = abs(reduced - sol.optimum)
    text = dumps(doc) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def random_problem(dims, rng: np.random.Generator) -> SeqOTProblem:
    """Uniform [0, 1] costs and Dirichlet(1) edge marginals."""
    costs = [rng.uniform(0.0, 1.0, size=(dims[i], dims[i + 1])) for i in range(len(dims) - 1)]
    a = rng.dirichlet(np.ones(dims[0]))
    b = rng.dirichlet(np.ones(dims[-1]))
    # renormalise so the sum is 1 to the last bit the check can see
    return SeqOTProblem(costs, a / a.sum(), b / b.sum())


def cmd_gen(args) -> int:
    if len(args.dims) < 3 or any(d < 1 for d in args.dims):
        raise ValueError("--dims needs at least three positive sizes (M >= 2)")
    p = random_problem(args.dims, np.random.default_rng(args.seed))
    if args.out:
        save_problem(p, args.out)
    else:
        sys.stdout.write(dumps(p.to_json_dict()) + "\n")
    return EXIT_OK


def _solver_flags(sp):
    sp.add_argument("--epsilon", type=float, help="regularisation strength (default: from --delta)")
    sp.add_argument("--delta", type=float, help="target suboptimality")
    sp.add_argument("--criterion", choices=["halfstep", "boundary"], default="halfstep")
    sp.add_argument("--backend", choices=["linear", "log"], default="linear")
    sp.add_argument("--max-iters", type=int, default=100_000)
    sp.add_argument("--tolerance", type=float, help="explicit residual threshold (required for M > 2)")
    sp.add_argument("--trace-every", type=int, default=1, help="trace stride (0 keeps only the end points)")
    sp.add_argument("--trace", help="trace CSV path")
    sp.add_argument("--reference", action="store_true", help="add Hilbert distances to a converged reference")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("solve", help="solve problems and write report JSON plus trace CSV")
    sp.add_argument("problems", nargs="+")
    _solver_flags(sp)
    sp.add_argument("--oracle", action="store_true", help="also compute the exact optimum")
    sp.add_argument("--out", help="report path (single problem only)")
    sp.add_argument("--out-dir", help="directory for reports and traces")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_solve)

    tp = sub.add_parser("trace", help="print the per-iteration trace as CSV")
    tp.add_argument("problem")
    _solver_flags(tp)
    tp.set_defaults(func=cmd_trace)

    op = sub.add_parser("oracle", help="exact optimum by min-cost flow")
    op.add_argument("problem")
    op.add_argument("--out")
    op.set_defaults(func=cmd_oracle)

    gp = sub.add_parser("gen", help="write a random problem")
    gp.add_argument("--dims", type=int, nargs="+", default=[4, 4, 4])
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--out")
    gp.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ScaleExceeded as exc:
        print(f"seqot: {exc}", file=sys.stderr)
        return EXIT_SCALE
    except ReferenceNotConverged as exc:
        print(f"seqot: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (OSError, ValueError, KeyError, TypeError, ArithmeticError) as exc:
        print(f"seqot: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
