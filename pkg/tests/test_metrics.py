import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from seqot.errors import LengthMismatch, NonPositiveEntry, ZeroDenominatorWithPositiveMass
from seqot.metrics import (
    birkhoff_gamma,
    birkhoff_lambda,
    hilbert_metric,
    kl_divergence,
    l1_distance,
    log_birkhoff_gamma,
)


def gamma_by_quadruples(A):
    """Independent oracle: enumerate every (i, j, k, l)."""
    A = np.asarray(A, dtype=float)
    n, m = A.shape
    best = 1.0
    for i, j in itertools.product(range(n), repeat=2):
        for k, l in itertools.product(range(m), repeat=2):
            best = max(best, A[i, k] * A[j, l] / (A[j, k] * A[i, l]))
    return best


pos = st.floats(min_value=1e-3, max_value=1e3)


def pos_vec(n):
    return arrays(np.float64, n, elements=pos)


# ------------------------------------------------------------------ examples


def test_hilbert_examples():
    assert hilbert_metric([1, 2], [3, 6]) == pytest.approx(0.0, abs=1e-15)
    assert hilbert_metric([1, 2], [2, 1]) == pytest.approx(math.log(4))
    assert hilbert_metric([1, 1, 1], [1, 1, 1]) == 0.0


def test_hilbert_errors():
    with pytest.raises(LengthMismatch):
        hilbert_metric([1, 2], [1, 2, 3])
    with pytest.raises(NonPositiveEntry):
        hilbert_metric([1, 0], [1, 1])
    with pytest.raises(NonPositiveEntry):
        hilbert_metric([1, -1], [1, 1])


def test_gamma_examples_against_enumeration():
    assert birkhoff_gamma(np.ones((3, 3))) == 1.0
    for A, expected in (([[1, 1], [1, 2]], 2.0), ([[10, 1], [1, 10]], 100.0)):
        assert gamma_by_quadruples(A) == pytest.approx(expected, rel=1e-15)
        assert birkhoff_gamma(A) == pytest.approx(expected, rel=1e-12)


def test_lambda_examples():
    assert birkhoff_lambda(np.ones((2, 2))) == 0.0
    assert birkhoff_lambda([[1, 1], [1, 2]]) == pytest.approx((math.sqrt(2) - 1) / (math.sqrt(2) + 1), rel=1e-12)
    assert birkhoff_lambda([[1, 1], [1, 2]]) == pytest.approx(0.171573, abs=1e-6)
    assert birkhoff_lambda([[10, 1], [1, 10]]) == pytest.approx(9 / 11, rel=1e-12)


def test_gamma_rejects_nonpositive():
    with pytest.raises(NonPositiveEntry):
        birkhoff_gamma([[1, 0], [1, 1]])


def test_gamma_overflow_is_inf():
    assert birkhoff_gamma(np.exp([[0.0, -400.0], [-400.0, 0.0]])) == math.inf
    assert log_birkhoff_gamma([[0.0, -400.0], [-400.0, 0.0]]) == pytest.approx(800.0)


def test_kl_examples():
    assert kl_divergence([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.5 * math.log(2) + 0.5 * math.log(2 / 3))
    assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.143841, abs=1e-6)
    assert kl_divergence([1, 0], [0.5, 0.5]) == pytest.approx(math.log(2))


def test_kl_errors():
    with pytest.raises(ZeroDenominatorWithPositiveMass):
        kl_divergence([0.5, 0.5], [1.0, 0.0])
    with pytest.raises(LengthMismatch):
        kl_divergence([1.0], [0.5, 0.5])


def test_l1_examples():
    assert l1_distance([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert l1_distance([1, 0], [0, 1]) == 2.0
    assert l1_distance([0.7, 0.3], [0.6, 0.4]) == pytest.approx(0.2)
    with pytest.raises(LengthMismatch):
        l1_distance([1], [1, 2])


# ---------------------------------------------------------------- properties


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(pos_vec(n), pos_vec(n), pos_vec(n))))
def test_hilbert_is_a_pseudometric(uvw):
    u, v, w = uvw
    assert hilbert_metric(u, v) >= 0
    assert hilbert_metric(u, v) == pytest.approx(hilbert_metric(v, u), abs=1e-12)
    assert hilbert_metric(u, w) <= hilbert_metric(u, v) + hilbert_metric(v, w) + 1e-10
    assert hilbert_metric(u, 3.7 * u) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(pos_vec(n), pos_vec(n), pos_vec(n))))
def test_hilbert_scale_and_sqrt_laws(uvc):
    u, v, c = uvc
    assert hilbert_metric(c * u, c * v) == pytest.approx(hilbert_metric(u, v), abs=1e-12)
    assert hilbert_metric(np.sqrt(u), np.sqrt(v)) == pytest.approx(hilbert_metric(u, v) / 2, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(*[pos_vec(n)] * 4)))
def test_hilbert_quotient_triangle(q):
    u, v, w, x = q
    assert hilbert_metric(u / x, v / w) <= hilbert_metric(u, v) + hilbert_metric(w, x) + 1e-10


@settings(max_examples=100, deadline=None)
@given(
    st.tuples(st.integers(1, 4), st.integers(1, 4)).flatmap(
        lambda s: arrays(np.float64, s, elements=st.floats(0.01, 100.0))
    )
)
def test_gamma_matches_enumeration(A):
    assert birkhoff_gamma(A) == pytest.approx(gamma_by_quadruples(A), rel=1e-9)
    assert birkhoff_gamma(A) >= 1.0
    assert 0.0 <= birkhoff_lambda(A) < 1.0


def test_birkhoff_contraction(rng):
    for _ in range(500):
        n, m = rng.integers(1, 6, size=2)
        A = np.exp(rng.normal(size=(n, m)))
        v, w = np.exp(rng.normal(size=m)), np.exp(rng.normal(size=m))
        assert hilbert_metric(A @ v, A @ w) <= birkhoff_lambda(A) * hilbert_metric(v, w) + 1e-10


def test_pinsker(rng):
    for _ in range(500):
        n = rng.integers(1, 8)
        c = rng.dirichlet(np.ones(n))
        d = rng.dirichlet(np.ones(n)) * rng.uniform(0.2, 1.0)
        assert l1_distance(c, d) ** 2 <= 2 * kl_divergence(c, d) + 1e-12
        assert kl_divergence(c, d) >= -1e-15
