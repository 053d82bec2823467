import numpy as np
import pytest

from seqot import SeqOTProblem
from seqot.cli import random_problem

SWAP = [[0.0, 1.0], [1.0, 0.0]]


def t1() -> SeqOTProblem:
    """Zero costs, uniform marginals: the initial scalings are already optimal."""
    return SeqOTProblem([np.zeros((2, 2)), np.zeros((2, 2))], [0.5, 0.5], [0.5, 0.5])


def t2() -> SeqOTProblem:
    return SeqOTProblem([SWAP, SWAP], [0.7, 0.3], [0.6, 0.4])


def uniform_chain(M: int) -> SeqOTProblem:
    return SeqOTProblem([np.zeros((2, 2))] * M, [0.5, 0.5], [0.5, 0.5])


def corpus(count: int, seed: int, chain=(2,), max_dim: int = 8, eps_range=(0.05, 1.0)):
    """Seeded random instances with dims in [2, max_dim] and eps drawn uniformly."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        M = int(rng.choice(chain))
        dims = rng.integers(2, max_dim + 1, size=M + 1)
        eps = float(rng.uniform(*eps_range))
        out.append((random_problem(dims, rng), eps))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS, key=lambda k: int(k.split()[0][2:])):
        terminalreporter.write_line(mod.RESULTS[key])
