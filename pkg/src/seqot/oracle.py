"""Ground truth at desk scale: exact optimum by min-cost flow, and converged scalings."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Backend, SeqOTProblem, build_kernels, compose_min_cost, validate_problem
from .errors import InfeasibleSupplies, ReferenceNotConverged, ScaleExceeded, WrongChainLength
from .plans import PlanKind, PlanSet
from .sinkhorn import boundary_residual, init_state, step_log_domain
from .state import ScalingState

MAX_ARCS = 10_000
SUPPLY_TOL = 1e-12  # flow left unrouted when augmentation stops
CAP_TOL = 1e-15  # residual capacities below this count as saturated


class MinCostFlow:
    """Successive shortest paths with Dijkstra on reduced costs.

    Capacities and supplies are real numbers; arcs whose residual capacity
    drops below ``CAP_TOL`` are treated as saturated.
    """

    def __init__(self, n_nodes: int):
        self.n = n_nodes
        self.adj = [[] for _ in range(n_nodes)]
        self.to = []
        self.cap = []
        self.cost = []
        self.potential = [0.0] * n_nodes

    def add_arc(self, u: int, v: int, cap: float, cost: float) -> int:
        """Add ``u -> v`` (and its zero-capacity reverse); returns the forward arc id."""
        e = len(self.to)
        self.to += [v, u]
        self.cap += [float(cap), 0.0]
        self.cost += [float(cost), -float(cost)]
        self.adj[u].append(e)
        self.adj[v].append(e + 1)
        return e

    def flow_on(self, e: int) -> float:
        # flow on a forward arc equals the capacity of its reverse twin
        return self.cap[e ^ 1]

    def _dijkstra(self, s: int):
        dist = [math.inf] * self.n
        prev = [-1] * self.n
        dist[s] = 0.0
        heap = [(0.0, s)]
        pot = self.potential
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for e in self.adj[u]:
                if self.cap[e] <= CAP_TOL:
                    continue
                v = self.to[e]
                nd = d + self.cost[e] + pot[u] - pot[v]
                if nd < dist[v] - 1e-15:
                    dist[v] = nd
                    prev[v] = e
                    heapq.heappush(heap, (nd, v))
        return dist, prev

    def run(self, s: int, t: int, amount: float) -> float:
        """Push up to ``amount`` units from ``s`` to ``t``; returns the amount left unrouted."""
        left = float(amount)
        while left > SUPPLY_TOL:
            dist, prev = self._dijkstra(s)
            if math.isinf(dist[t]):
                break
            cap_t = dist[t]
            for v in range(self.n):
                self.potential[v] += min(dist[v], cap_t)
            push = left
            v = t
            while v != s:
                e = prev[v]
                push = min(push, self.cap[e])
                v = self.to[e ^ 1]
            v = t
            while v != s:
                e = prev[v]
                self.cap[e] -= push
                self.cap[e ^ 1] += push
                v = self.to[e ^ 1]
            left -= push
        return left


def _layered_flow(costs, a, b):
    """Route ``a`` through the cost layers into ``b``; returns (plans, layer potentials)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if abs(a.sum() - b.sum()) > 2 * SUPPLY_TOL:
        raise InfeasibleSupplies(f"supply {a.sum()!r} differs from demand {b.sum()!r}")
    dims = [costs[0].shape[0]] + [C.shape[1] for C in costs]
    offsets = np.concatenate([[1], 1 + np.cumsum(dims)]).astype(int)
    source, sink = 0, int(offsets[-1])
    g = MinCostFlow(sink + 1)
    for j, aj in enumerate(a):
        g.add_arc(source, offsets[0] + j, aj, 0.0)
    layer_arcs = []
    for i, C in enumerate(costs):
        ids = np.empty(C.shape, dtype=int)
        for j in range(C.shape[0]):
            for k in range(C.shape[1]):
                ids[j, k] = g.add_arc(offsets[i] + j, offsets[i + 1] + k, math.inf, C[j, k])
        layer_arcs.append(ids)
    for k, bk in enumerate(b):
        g.add_arc(offsets[-2] + k, sink, bk, 0.0)
    left = g.run(source, sink, min(a.sum(), b.sum()))
    if left > SUPPLY_TOL:
        raise InfeasibleSupplies(f"{left:g} units could not be routed")
    plans = [np.vectorize(g.flow_on, otypes=[float])(ids) for ids in layer_arcs]
    pots = [np.array(g.potential[offsets[i] : offsets[i] + m]) for i, m in enumerate(dims)]
    return plans, pots


def _check_scale(p: SeqOTProblem, extra: int = 0):
    arcs = sum(C.size for C in p.costs) + extra
    if arcs > MAX_ARCS:
        raise ScaleExceeded(f"{arcs} arcs exceeds the desk-scale limit of {MAX_ARCS}")


@dataclass(frozen=True)
class ExactSolution:
    optimum: float
    plans: PlanSet
    # node potentials per layer: C[j, k] + pi_i[j] - pi_{i+1}[k] >= 0, with equality where flow runs
    dual_certificate: Optional[list] = None


def exact_seqot(p: SeqOTProblem) -> ExactSolution:
    """Unregularised optimum via min-cost flow on the layered graph."""
    _check_scale(p)
    validate_problem(p)
    plans, pots = _layered_flow(p.costs, p.a, p.b)
    opt = float(sum(np.sum(C * P) for C, P in zip(p.costs, plans)))
    return ExactSolution(opt, PlanSet(tuple(plans), PlanKind.EXACT, 0), pots)


def reduce_to_ot(p: SeqOTProblem):
    """Solve plain OT under the composed cost and lift each cell through its best middle point."""
    if p.M != 2:
        raise WrongChainLength(f"reduction needs M=2, got M={p.M}")
    m1, _, m3 = p.dims
    _check_scale(p, m1 * m3)
    validate_problem(p)
    C, arg = compose_min_cost(p)
    (gamma,), _ = _layered_flow([C], p.a, p.b)
    P1 = np.zeros(p.costs[0].shape)
    P2 = np.zeros(p.costs[1].shape)
    for i in range(m1):
        for j in range(m3):
            k = arg[i, j]
            P1[i, k] += gamma[i, j]
            P2[k, j] += gamma[i, j]
    return float(np.sum(C * gamma)), PlanSet((P1, P2), PlanKind.EXACT, 0)


@dataclass(frozen=True)
class ReferenceVectors:
    """Scalings of (numerically) the regularised optimum, kept as logarithms."""

    state: ScalingState
    residual_at_reference: float
    iterations: int

    @property
    def epsilon(self) -> float:
        return self.state.epsilon

    @property
    def log_u_hat(self) -> list:
        return self.state.log_scalings()

    @property
    def u_hat(self) -> list:
        return self.state.scalings()


def high_precision_reference(
    p: SeqOTProblem, epsilon: float, tol: float = 1e-13, max_iters: int = 10**6
) -> ReferenceVectors:
    """Run the log-domain iteration until every boundary mismatch is at most ``tol``."""
    validate_problem(p)
    k = build_kernels(p, epsilon)
    s = init_state(k, Backend.LOG)
    res = boundary_residual(s, k, p)
    while s.n < max_iters:
        s = step_log_domain(s, k, p)
        res = boundary_residual(s, k, p)
        if res <= tol:
            return ReferenceVectors(s, res, s.n)
    raise ReferenceNotConverged(f"boundary residual {res:.3g} after {s.n} iterations (target {tol:g})")
