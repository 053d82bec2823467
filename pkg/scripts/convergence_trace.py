"""Hilbert distance of every scaling vector to a converged reference, next to its predicted bound.

    python scripts/convergence_trace.py --dims 5 6 4 --eps 0.2 --seed 3 --iters 40 > trace.csv
"""

import argparse
import sys

import numpy as np

from seqot import build_kernels, contraction_bound, high_precision_reference, init_state, step
from seqot.cli import random_problem
from seqot.metrics import hilbert_metric_log
from seqot.serialize import fmt_float
from seqot.sinkhorn import boundary_hilbert


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[5, 6, 4])
    ap.add_argument("--eps", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--iters", type=int, default=40)
    args = ap.parse_args(argv)

    p = random_problem(args.dims, np.random.default_rng(args.seed))
    k = build_kernels(p, args.eps)
    ref = high_precision_reference(p, args.eps)
    cb = contraction_bound(k, ref)
    print(f"# rate {cb.rate:.6g}, coefficient {cb.coefficient:.6g}, reference after {ref.iterations} iterations", file=sys.stderr)

    layers = range(p.M + 1)
    header = ["n"] + [f"hilbert_{i + 1}" for i in layers] + [f"bound_{i + 1}" for i in layers]
    header += ["boundary_hilbert_max", "boundary_bound"]
    print(",".join(header))
    s = init_state(k)
    for n in range(args.iters + 1):
        if n:
            s = step(s, k, p)
        dists = [hilbert_metric_log(x, y) for x, y in zip(s.log_scalings(), ref.log_u_hat)]
        row = [str(n)] + [fmt_float(d) for d in dists] + [fmt_float(cb.hilbert_bound(n, i)) for i in layers]
        row += [fmt_float(max(boundary_hilbert(s, k))), fmt_float(cb.boundary_bound(n))]
        print(",".join(row))


if __name__ == "__main__":
    main()
