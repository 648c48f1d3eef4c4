import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helperbounds.core import BoundResult, bconv, entropy, h2, h2_inv, mutual_information, split_entropy

# 40-digit mpmath evaluation of -0.1 log2 0.1 - 0.9 log2 0.9
H2_OF_TENTH = 0.4689955935892812212535893303833204600972

prob = st.floats(0, 1, allow_nan=False)


def test_h2_examples():
    assert h2(0.5) == 1.0
    assert h2(0.0) == 0.0
    assert h2(1.0) == 0.0
    assert h2(0.1) == pytest.approx(H2_OF_TENTH, abs=1e-15)


@pytest.mark.parametrize("bad", [-1e-9, 1.0 + 1e-9, float("nan")])
def test_h2_rejects_outside(bad):
    with pytest.raises(ValueError):
        h2(bad)


def test_h2_inv_examples():
    assert h2_inv(1.0) == 0.5
    assert h2_inv(0.0) == 0.0
    assert h2_inv(-0.3) == 0.0
    assert h2_inv(1.3) == 0.0
    assert h2_inv(h2(0.1)) == pytest.approx(0.1, abs=1e-10)


def test_h2_inv_vectorised_matches_scalar():
    ts = np.linspace(-0.2, 1.2, 57)
    assert np.allclose(h2_inv(ts), [h2_inv(float(t)) for t in ts], atol=0, rtol=0)


def test_bconv_examples():
    assert bconv(0.37, 0) == pytest.approx(0.37)
    assert bconv(0.5, 0.81) == pytest.approx(0.5)
    assert bconv(0.1, 0.2) == pytest.approx(0.26, abs=1e-15)


def test_h2_symmetric_and_concave_on_grid():
    p = np.linspace(0, 1, 1000)
    assert np.max(np.abs(h2(p) - h2(1 - p))) <= 1e-12
    mid = h2((p[:-2] + p[2:]) / 2)
    assert np.all(mid >= (h2(p[:-2]) + h2(p[2:])) / 2 - 1e-12)


def test_round_trip_on_grid():
    t = np.linspace(0, 1, 1000)
    assert np.max(np.abs(h2(h2_inv(t)) - t)) <= 1e-9


@given(prob, prob)
def test_bconv_commutative(a, b):
    assert abs(bconv(a, b) - bconv(b, a)) <= 1e-12


@given(prob, prob, prob)
def test_bconv_associative(a, b, c):
    assert abs(bconv(bconv(a, b), c) - bconv(a, bconv(b, c))) <= 1e-12


@given(st.floats(0, 1))
def test_h2_inv_is_in_lower_half(t):
    p = h2_inv(t)
    assert 0 <= p <= 0.5
    assert abs(h2(p) - t) <= 1e-9


@settings(max_examples=50)
@given(st.floats(0, 5), st.floats(0, 5))
def test_split_entropy_matches_definition(m, n):
    s = m + n
    ref = 0.0 if s == 0 else s * h2(m / s)
    assert split_entropy(m, n) == pytest.approx(ref, abs=1e-12)


def test_mutual_information_independent_and_copy():
    assert mutual_information(np.outer([0.3, 0.7], [0.2, 0.8])) == pytest.approx(0, abs=1e-12)
    assert mutual_information(np.diag([0.25, 0.75])) == pytest.approx(entropy([0.25, 0.75]))


def test_bound_result_kind_checked():
    r = BoundResult(0.25, "lower")
    assert float(r) == 0.25
    with pytest.raises(ValueError):
        BoundResult(0.1, "sideways")
