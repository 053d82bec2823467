"""Scaling-vector state shared by the iteration engine and the plan builders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Backend


def logsumexp(x: np.ndarray, axis: int) -> np.ndarray:
    """Max-shifted log-sum-exp along one axis of a 2-d array.

    Hand-rolled because ``scipy.special.logsumexp`` costs ~10x more per call on
    the tiny matrices this package works with, and the reference runs call it
    millions of times.
    """
    m = x.max(axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = m + np.log(np.exp(x - m).sum(axis=axis, keepdims=True))
    return out.squeeze(axis)


def logsumexp_all(x: np.ndarray) -> float:
    m = float(x.max())
    if not np.isfinite(m):
        return m
    return m + float(np.log(np.exp(x - m).sum()))


@dataclass(frozen=True)
class ScalingState:
    """The ``M + 1`` scaling vectors after ``n`` iterations.

    With ``representation == Backend.LINEAR`` the vectors are the scalings ``u``
    themselves; with ``Backend.LOG`` they are the potentials ``f = eps * log u``.
    """

    vectors: tuple
    n: int
    representation: Backend
    epsilon: float

    def __post_init__(self):
        vecs = tuple(np.asarray(v, dtype=np.float64) for v in self.vectors)
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "representation", Backend(self.representation))
        if self.n < 0:
            raise ValueError("iteration counter must be nonnegative")
        for v in vecs:
            if v.ndim != 1 or not np.all(np.isfinite(v)):
                raise ValueError("scaling vectors must be finite 1-d arrays")
            if self.representation is Backend.LINEAR and not np.all(v > 0):
                raise ValueError("linear scalings must be strictly positive")

    @property
    def M(self) -> int:
        return len(self.vectors) - 1

    def log_scalings(self) -> list:
        """``log u`` for every layer, whatever the storage."""
        if self.representation is Backend.LINEAR:
            return [np.log(v) for v in self.vectors]
        return [v / self.epsilon for v in self.vectors]

    def scalings(self) -> list:
        if self.representation is Backend.LINEAR:
            return list(self.vectors)
        return [np.exp(v / self.epsilon) for v in self.vectors]

    def potentials(self) -> list:
        if self.representation is Backend.LOG:
            return list(self.vectors)
        return [self.epsilon * np.log(v) for v in self.vectors]

    def to_log(self) -> "ScalingState":
        if self.representation is Backend.LOG:
            return self
        return ScalingState(tuple(self.potentials()), self.n, Backend.LOG, self.epsilon)

    def to_linear(self) -> "ScalingState":
        if self.representation is Backend.LINEAR:
            return self
        return ScalingState(tuple(self.scalings()), self.n, Backend.LINEAR, self.epsilon)
