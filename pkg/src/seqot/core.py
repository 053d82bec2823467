"""Problem instances, Gibbs kernels, solver configuration and the eps(delta) rule."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateDimensions,
    InvalidProblem,
    NegativeCost,
    NonPositiveEpsilon,
    NonStochasticMarginal,
    ShapeMismatch,
    WrongChainLength,
)

MARGINAL_TOL = 1e-12
TINY = np.finfo(np.float64).tiny


def _frozen(x, ndim=None) -> np.ndarray:
    arr = np.array(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ShapeMismatch(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SeqOTProblem:
    """A chain of ``M`` cost matrices plus the two edge distributions.

    ``costs[i]`` has shape ``(dims[i], dims[i+1])``. Construction only converts
    to read-only float64 arrays; call :func:`validate_problem` to check
    well-formedness.
    """

    costs: tuple
    a: np.ndarray
    b: np.ndarray

    def __init__(self, costs: Sequence, a, b):
        object.__setattr__(self, "costs", tuple(_frozen(c, 2) for c in costs))
        object.__setattr__(self, "a", _frozen(a, 1))
        object.__setattr__(self, "b", _frozen(b, 1))

    @property
    def M(self) -> int:
        return len(self.costs)

    @property
    def dims(self) -> tuple:
        if not self.costs:
            return (len(self.a),)
        return (self.costs[0].shape[0],) + tuple(c.shape[1] for c in self.costs)

    def cost_inf_norms(self) -> list:
        """Max absolute entry of each cost matrix."""
        return [float(np.abs(c).max()) if c.size else 0.0 for c in self.costs]

    def to_json_dict(self) -> dict:
        return {
            "costs": [c.tolist() for c in self.costs],
            "a": self.a.tolist(),
            "b": self.b.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SeqOTProblem":
        missing = {"costs", "a", "b"} - set(d)
        if missing:
            raise ValueError(f"problem document lacks keys {sorted(missing)}")
        return cls(d["costs"], d["a"], d["b"])


def load_problem(path) -> SeqOTProblem:
    with open(path) as fh:
        return SeqOTProblem.from_json_dict(json.load(fh))


def save_problem(p: SeqOTProblem, path) -> None:
    from .serialize import dumps

    Path(path).write_text(dumps(p.to_json_dict()) + "\n")


def problem_violations(p: SeqOTProblem) -> list:
    """Every violated problem invariant, as exception instances (empty if valid)."""
    out = []
    if p.M < 2:
        out.append(ShapeMismatch(f"chain length M={p.M}, need M >= 2"))
    for name, vec in (("a", p.a), ("b", p.b)):
        if not np.all(np.isfinite(vec)) or np.any(vec < 0):
            out.append(NonStochasticMarginal(f"{name} has negative or non-finite entries"))
        elif abs(vec.sum() - 1.0) > MARGINAL_TOL:
            out.append(NonStochasticMarginal(f"{name} sums to {vec.sum()!r}, not 1"))
    for i, c in enumerate(p.costs):
        if not np.all(np.isfinite(c)):
            out.append(NegativeCost(f"costs[{i}] has non-finite entries"))
        elif np.any(c < 0):
            out.append(NegativeCost(f"costs[{i}] has negative entries"))
    if p.costs:
        if p.costs[0].shape[0] != len(p.a):
            out.append(ShapeMismatch(f"costs[0] has {p.costs[0].shape[0]} rows but len(a)={len(p.a)}"))
        if p.costs[-1].shape[1] != len(p.b):
            out.append(ShapeMismatch(f"costs[-1] has {p.costs[-1].shape[1]} columns but len(b)={len(p.b)}"))
        for i in range(len(p.costs) - 1):
            if p.costs[i].shape[1] != p.costs[i + 1].shape[0]:
                out.append(
                    ShapeMismatch(
                        f"costs[{i}] is {p.costs[i].shape} but costs[{i + 1}] is {p.costs[i + 1].shape}"
                    )
                )
    return out


def validate_problem(p: SeqOTProblem, dims: Optional[Sequence[int]] = None) -> SeqOTProblem:
    """Return ``p`` unchanged if well formed, else raise :class:`InvalidProblem`.

    ``dims`` optionally pins the expected chain dimensions ``m_1..m_{M+1}``.
    """
    violations = problem_violations(p)
    if dims is not None:
        dims = tuple(int(d) for d in dims)
        if len(dims) != p.M + 1:
            violations.append(ShapeMismatch(f"dims {dims} imply M={len(dims) - 1}, got M={p.M}"))
        else:
            for i, c in enumerate(p.costs):
                if c.shape != (dims[i], dims[i + 1]):
                    violations.append(ShapeMismatch(f"costs[{i}] shape {c.shape} != {(dims[i], dims[i + 1])}"))
            if len(p.a) != dims[0] or len(p.b) != dims[-1]:
                violations.append(ShapeMismatch("marginal lengths disagree with dims"))
    if violations:
        raise InvalidProblem(violations)
    return p


@dataclass(frozen=True)
class GibbsKernels:
    """``kernels[i] = exp(-costs[i] / epsilon)`` together with its logarithm.

    The log form is what the log-domain backend consumes; the linear form may
    contain underflowed entries, which the linear backend refuses.
    """

    epsilon: float
    kernels: tuple
    log_kernels: tuple

    @property
    def M(self) -> int:
        return len(self.kernels)

    @property
    def dims(self) -> tuple:
        return (self.kernels[0].shape[0],) + tuple(k.shape[1] for k in self.kernels)

    def has_underflow(self) -> bool:
        return any(np.any(k < TINY) for k in self.kernels)


def build_kernels(p: SeqOTProblem, epsilon: float) -> GibbsKernels:
    if not epsilon > 0 or not math.isfinite(epsilon):
        raise NonPositiveEpsilon(f"epsilon must be a positive finite number, got {epsilon!r}")
    logs = tuple(_frozen(-c / epsilon) for c in p.costs)
    kernels = tuple(_frozen(np.exp(lk)) for lk in logs)
    return GibbsKernels(float(epsilon), kernels, logs)


def compose_min_cost(p: SeqOTProblem):
    """Composed two-leg cost ``C[i, j] = min_k costs[0][i, k] + costs[1][k, j]``.

    Returns ``(C, argmin)``; ties go to the smallest ``k``.
    """
    if p.M != 2:
        raise WrongChainLength(f"composition needs M=2, got M={p.M}")
    total = p.costs[0][:, :, None] + p.costs[1][None, :, :]
    # np.argmin returns the first minimiser
    arg = np.argmin(total, axis=1)
    comp = np.take_along_axis(total, arg[:, None, :], axis=1)[:, 0, :]
    return comp, arg


def epsilon_from_delta(p: SeqOTProblem, delta: float) -> float:
    """Regularisation strength that makes the entropic bias at most delta/2."""
    if p.M != 2:
        raise WrongChainLength(f"eps(delta) rule is stated for M=2, got M={p.M}")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    m1, m2, m3 = p.dims
    size = m1 * m2 * m2 * m3
    if size <= 1:
        raise DegenerateDimensions("all dimensions are 1; log(m1 m2^2 m3) = 0")
    return delta / (2.0 * math.log(size))


class Criterion(enum.Enum):
    HALFSTEP = "halfstep"
    BOUNDARY = "boundary"


class Backend(enum.Enum):
    LINEAR = "linear"
    LOG = "log"


@dataclass(frozen=True)
class SolveConfig:
    """Solver settings.

    ``epsilon`` defaults to :func:`epsilon_from_delta` and ``residual_tolerance``
    to ``delta / (16 max_i ||C_i||_inf)``; both fallbacks need ``delta`` and M=2.
    ``trace_every=0`` disables per-iteration trace records.
    """

    epsilon: Optional[float] = None
    delta: Optional[float] = None
    max_iters: int = 100_000
    criterion: Criterion = Criterion.HALFSTEP
    backend: Backend = Backend.LINEAR
    residual_tolerance: Optional[float] = None
    trace_every: int = 1

    def __post_init__(self):
        if self.epsilon is not None and not self.epsilon > 0:
            raise NonPositiveEpsilon(f"epsilon must be positive, got {self.epsilon!r}")
        if self.delta is not None and not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.residual_tolerance is not None and not self.residual_tolerance > 0:
            raise ValueError("residual_tolerance must be positive")
        if self.trace_every < 0:
            raise ValueError("trace_every must be >= 0")
        object.__setattr__(self, "criterion", Criterion(self.criterion))
        object.__setattr__(self, "backend", Backend(self.backend))
