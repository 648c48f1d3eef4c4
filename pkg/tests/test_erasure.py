import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helperbounds import ErasureProblem, dmin_erasure


def policy_grid_oracle(src, p2, cost, dmat, n=401):
    """Min over gridded p(x|s2) of P(erased) * prior risk + P(seen) * E min_s d."""
    src, dmat = np.asarray(src, float), np.asarray(dmat, float)
    blind = float(np.min(src @ dmat))
    seen = float(src @ dmat.min(axis=1))
    q = np.linspace(0, 1, n)
    q0, q1 = np.meshgrid(q, q, indexing="ij")      # P(X=1 | S2=0), P(X=1 | S2=1)
    spend = (1 - p2) * q0 + p2 * q1
    erased = (1 - p2) * q0 + p2 * (1 - q1)
    val = erased * blind + (1 - erased) * seen
    return float(np.where(spend <= cost + 1e-12, val, np.inf).min())


@pytest.mark.parametrize("src,p2,cost", [([0.1, 0.9], 0.3, 0.3), ([0.2, 0.3, 0.5], 0.4, 0.7)])
def test_full_cancellation_is_perfect(src, p2, cost):
    assert dmin_erasure(ErasureProblem(src, p2, cost)).value == 0.0


def test_examples():
    assert dmin_erasure(ErasureProblem([0.9, 0.1], 0.5, 0.2)).value == pytest.approx(0.03, abs=1e-15)
    r = dmin_erasure(ErasureProblem([0.5, 0.5], 0.4, 0.0))
    assert r.value == pytest.approx(0.2, abs=1e-15)
    assert r.kind == "exact"


@pytest.mark.parametrize("src,p2,cost,d", [
    ([0.9, 0.1], 0.5, 0.2, None),
    ([0.2, 0.3, 0.5], 0.7, 0.25, None),
    ([0.6, 0.4], 0.35, 0.1, [[0, 1, 0.3], [2, 0, 0.4]]),
    ([0.25, 0.25, 0.5], 0.9, 0.05, [[0.1, 1.0], [0.5, 0.2], [1.0, 0.3]]),
])
def test_matches_policy_grid(src, p2, cost, d):
    prob = ErasureProblem(src, p2, cost, d)
    # the grid contains the full-cancellation policy exactly only on lattice budgets
    assert dmin_erasure(prob).value <= policy_grid_oracle(src, p2, cost, prob.dmat) + 1e-12
    assert dmin_erasure(prob).value >= policy_grid_oracle(src, p2, cost, prob.dmat, n=4001) - 1e-3


@settings(max_examples=60)
@given(st.lists(st.floats(0.01, 1), min_size=2, max_size=5), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_monotone_in_cost(w, p2, c1, c2):
    src = np.array(w) / sum(w)
    src[-1] = 1 - src[:-1].sum()
    lo, hi = sorted((c1, c2))
    a = dmin_erasure(ErasureProblem(src, p2, lo)).value
    b = dmin_erasure(ErasureProblem(src, p2, hi)).value
    assert b <= a + 1e-15
    if hi >= p2:
        assert b == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=60)
@given(st.floats(0.01, 0.99), st.floats(0, 1), st.floats(0, 1))
def test_covering_alphabet_scales_prior_risk(p, p2, cost):
    prob = ErasureProblem([p, 1 - p], p2, cost)
    assert dmin_erasure(prob).value == pytest.approx(max(p2 - cost, 0) * min(p, 1 - p), abs=1e-15)


@pytest.mark.parametrize("kwargs", [
    dict(source_dist=[0.5, 0.6], p2=0.1, cost=0.1),
    dict(source_dist=[1.2, -0.2], p2=0.1, cost=0.1),
    dict(source_dist=[0.5, 0.5], p2=1.1, cost=0.1),
    dict(source_dist=[0.5, 0.5], p2=0.1, cost=-0.1),
    dict(source_dist=[0.5, 0.5], p2=0.1, cost=0.1, distortion=[[0, 1]]),
    dict(source_dist=[0.5, 0.5], p2=0.1, cost=0.1, distortion=[[0, -1], [1, 0]]),
    dict(source_dist=[], p2=0.1, cost=0.1),
])
def test_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        ErasureProblem(**kwargs)


def test_sum_tolerance_edge():
    ErasureProblem([0.5, 0.5 + 5e-13], 0.1, 0.1)
    with pytest.raises(ValueError):
        ErasureProblem([0.5, 0.5 + 5e-12], 0.1, 0.1)
