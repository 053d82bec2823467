import numpy as np
import pytest
from scipy.optimize import linprog

from conftest import corpus, t1, t2, uniform_chain
from seqot import SeqOTProblem, SolveConfig, build_kernels, solve
from seqot.errors import InfeasibleSupplies, ReferenceNotConverged, ScaleExceeded, WrongChainLength
from seqot.oracle import MinCostFlow, _layered_flow, exact_seqot, high_precision_reference, reduce_to_ot
from seqot.plans import PlanSet, objective, plans_from_state
from seqot.rounding import round_to_feasible
from seqot.sinkhorn import boundary_residual


def lp_optimum(p):
    """Third, independent oracle: the chain LP handed to HiGHS."""
    sizes = [C.size for C in p.costs]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    c = np.concatenate([C.ravel() for C in p.costs])
    rows, rhs = [], []

    def block(i, axis):
        n, m = p.costs[i].shape
        out = np.zeros((n if axis == 1 else m, offs[-1]))
        for j in range(n):
            for l in range(m):
                out[j if axis == 1 else l, offs[i] + j * m + l] = 1.0
        return out

    rows.append(block(0, 1))
    rhs.append(p.a)
    rows.append(block(p.M - 1, 0))
    rhs.append(p.b)
    for i in range(p.M - 1):
        rows.append(block(i, 0) - block(i + 1, 1))
        rhs.append(np.zeros(p.costs[i].shape[1]))
    res = linprog(c, A_eq=np.vstack(rows), b_eq=np.concatenate(rhs), bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


def assert_feasible(ps, p, tol=1e-10):
    P = ps.plans
    np.testing.assert_allclose(P[0].sum(axis=1), p.a, atol=tol)
    np.testing.assert_allclose(P[-1].sum(axis=0), p.b, atol=tol)
    for i in range(len(P) - 1):
        np.testing.assert_allclose(P[i].sum(axis=0), P[i + 1].sum(axis=1), atol=tol)
    assert all(np.all(x >= 0) for x in P)


def test_t1_t2_m3_examples():
    sol = exact_seqot(t1())
    assert sol.optimum == 0.0
    assert_feasible(sol.plans, t1())
    sol = exact_seqot(t2())
    assert lp_optimum(t2()) == pytest.approx(0.1, abs=1e-12)
    assert sol.optimum == pytest.approx(0.1, abs=1e-12)
    assert_feasible(sol.plans, t2())
    assert exact_seqot(uniform_chain(3)).optimum == 0.0


def test_reduce_examples():
    opt, ps = reduce_to_ot(t2())
    assert opt == pytest.approx(0.1, abs=1e-12)
    assert_feasible(ps, t2())
    assert objective(ps, t2())[0] == pytest.approx(0.1, abs=1e-12)
    assert reduce_to_ot(t1())[0] == 0.0
    with pytest.raises(WrongChainLength):
        reduce_to_ot(uniform_chain(3))


def test_t2_composed_plan():
    # plain OT between (0.7, 0.3) and (0.6, 0.4) under the swap cost
    (gamma,), _ = _layered_flow([np.array([[0.0, 1.0], [1.0, 0.0]])], [0.7, 0.3], [0.6, 0.4])
    np.testing.assert_allclose(gamma, [[0.6, 0.1], [0.0, 0.3]], atol=1e-14)


def test_three_oracles_agree():
    for p, _ in corpus(40, seed=40, chain=(2, 3, 4)):
        sol = exact_seqot(p)
        assert sol.optimum == pytest.approx(lp_optimum(p), abs=1e-9)
        assert_feasible(sol.plans, p)
        if p.M == 2:
            assert reduce_to_ot(p)[0] == pytest.approx(sol.optimum, abs=1e-10)


def test_dual_certificate():
    for p, _ in corpus(30, seed=41, chain=(2, 3)):
        sol = exact_seqot(p)
        pi = sol.dual_certificate
        for i, (C, P) in enumerate(zip(p.costs, sol.plans.plans)):
            red = C + pi[i][:, None] - pi[i + 1][None, :]
            assert red.min() >= -1e-8
            assert np.all(np.abs(red[P > 1e-12]) <= 1e-8)


def test_lower_bound_on_feasible_tuples(rng):
    for p, _ in corpus(30, seed=42):
        opt = exact_seqot(p).optimum
        for _ in range(5):
            s = rng.dirichlet(np.ones(p.dims[1]))
            P1 = round_to_feasible(rng.uniform(size=p.costs[0].shape), p.a, s).rounded
            P2 = round_to_feasible(rng.uniform(size=p.costs[1].shape), s, p.b).rounded
            assert opt <= objective(PlanSet((P1, P2), "rounded", 0), p)[0] + 1e-10


def test_scale_and_supply_guards():
    big = SeqOTProblem([np.zeros((80, 80)), np.zeros((80, 80))], np.full(80, 1 / 80), np.full(80, 1 / 80))
    with pytest.raises(ScaleExceeded):
        exact_seqot(big)
    with pytest.raises(ScaleExceeded):
        reduce_to_ot(big)
    with pytest.raises(InfeasibleSupplies):
        _layered_flow([np.zeros((2, 2))], [0.5, 0.5], [0.5, 0.6])


def test_flow_engine_small_graph():
    g = MinCostFlow(4)
    g.add_arc(0, 1, 1.0, 1.0)
    g.add_arc(0, 2, 1.0, 2.0)
    e = g.add_arc(1, 3, 0.5, 0.0)
    g.add_arc(2, 3, 1.0, 0.0)
    assert g.run(0, 3, 1.0) == pytest.approx(0.0)
    assert g.flow_on(e) == pytest.approx(0.5)


def test_reference_examples():
    ref = high_precision_reference(t1(), 1.0)
    assert ref.iterations == 1
    for got, want in zip(ref.u_hat, ([0.25, 0.25], [1, 1], [0.25, 0.25])):
        np.testing.assert_allclose(got, want, rtol=1e-14)
    p = t2()
    ref = high_precision_reference(p, 0.5)
    assert ref.residual_at_reference <= 1e-13
    k = build_kernels(p, 0.5)
    assert_feasible(plans_from_state(ref.state, k), p, tol=1e-10)
    with pytest.raises(ReferenceNotConverged):
        high_precision_reference(p, 0.5, max_iters=3)


def test_reference_is_locally_optimal(rng):
    p = t2()
    eps = 0.5
    ref = high_precision_reference(p, eps)
    k = build_kernels(p, eps)
    best = objective(plans_from_state(ref.state.to_linear(), k), p, eps)[1]
    P1, P2 = plans_from_state(ref.state.to_linear(), k).plans
    for _ in range(50):
        s = P1.sum(axis=0) * np.exp(0.05 * rng.normal(size=2))
        s /= s.sum()
        Q1 = round_to_feasible(P1 * np.exp(0.05 * rng.normal(size=P1.shape)), p.a, s).rounded
        Q2 = round_to_feasible(P2 * np.exp(0.05 * rng.normal(size=P2.shape)), s, p.b).rounded
        assert best <= objective(PlanSet((Q1, Q2), "rounded", 0), p, eps)[1] + 1e-12


def test_reference_scale_freedom():
    p = t2()
    ref = high_precision_reference(p, 0.5)
    k = build_kernels(p, 0.5)
    u1, u2, u3 = ref.u_hat
    c = 3.7
    from seqot.sinkhorn import ScalingState

    scaled = ScalingState((c * u1, c * u2, u3 / c), ref.state.n, "linear", 0.5)
    for x, y in zip(plans_from_state(scaled, k).plans, plans_from_state(ref.state, k).plans):
        np.testing.assert_allclose(x, y, atol=1e-12)
    assert boundary_residual(scaled, k, p) <= 1e-12


def test_small_eps_cost_approaches_optimum():
    # informational sanity check only
    p = t2()
    costs = []
    for eps in (0.5, 0.1, 0.02):
        rep = solve(p, SolveConfig(epsilon=eps, residual_tolerance=1e-12, criterion="boundary", backend="log"))
        costs.append(objective(rep.induced, p)[0])
    assert costs[0] >= costs[1] - 1e-6 >= costs[2] - 2e-6
    assert costs[-1] == pytest.approx(0.1, abs=0.05)
