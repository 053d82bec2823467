"""Sweep the target suboptimality delta and compare the rounded cost with the exact optimum.

    python scripts/epsilon_sweep.py --instances 10 --deltas 0.4 0.2 0.1 0.05
"""

import argparse
import math
import warnings

import numpy as np

from seqot import SolveConfig, build_kernels, exact_seqot, iteration_bound, objective, solve
from seqot.cli import random_problem


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=10)
    ap.add_argument("--max-dim", type=int, default=8)
    ap.add_argument("--deltas", type=float, nargs="+", default=[0.4, 0.2, 0.1, 0.05])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    print("instance,dims,delta,epsilon,iterations,budget,rounded_cost,optimum,gap")
    warnings.simplefilter("ignore")
    for idx in range(args.instances):
        dims = rng.integers(2, args.max_dim + 1, size=3)
        p = random_problem(dims, rng)
        opt = exact_seqot(p).optimum
        for delta in args.deltas:
            rep = solve(p, SolveConfig(delta=delta, trace_every=0))
            cost = objective(rep.rounded, p)[0]
            budget = math.ceil(iteration_bound(build_kernels(p, rep.epsilon), rep.threshold))
            print(
                f"{idx},{'x'.join(map(str, dims))},{delta:g},{rep.epsilon:.6g},{rep.n},{budget},"
                f"{cost:.10g},{opt:.10g},{cost - opt:.3e}"
            )


if __name__ == "__main__":
    main()
