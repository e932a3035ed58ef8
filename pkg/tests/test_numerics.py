import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frameattn.numerics import make_rng, masked_row_softmax, matmul, softmax_backward, transpose


def test_matmul_identity():
    b = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(matmul(np.eye(2), b), b)


def test_matmul_hand_example():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[0.0], [1.0]])
    assert np.array_equal(matmul(a, b), np.array([[2.0], [4.0]]))


def test_matmul_empty_contraction():
    out = matmul(np.zeros((1, 0)), np.zeros((0, 1)))
    assert out.shape == (1, 1)
    assert out[0, 0] == 0.0


def test_matmul_dimension_mismatch():
    with pytest.raises(ValueError):
        matmul(np.zeros((2, 3)), np.zeros((2, 3)))


def test_matmul_rejects_nan():
    with pytest.raises(ValueError):
        matmul(np.array([[np.nan, 0.0]]), np.zeros((2, 1)))


@given(st.integers(0, 2**63 - 1))
@settings(max_examples=25, deadline=None)
def test_rng_same_seed_same_stream(seed):
    a = make_rng(seed).standard_normal(16)
    b = make_rng(seed).standard_normal(16)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, make_rng(seed, 1).standard_normal(16))


@given(st.integers(0, 2**32), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6))
@settings(max_examples=60, deadline=None)
def test_matmul_associative(seed, n, k, m, p):
    rng = make_rng(seed)
    a = rng.standard_normal((n, k))
    b = rng.standard_normal((k, m))
    c = rng.standard_normal((m, p))
    left = matmul(matmul(a, b), c)
    right = matmul(a, matmul(b, c))
    scale = max(np.abs(left).max(), np.abs(right).max(), 1.0)
    assert np.abs(left - right).max() / scale < 1e-9


def test_transpose_round_trip():
    a = make_rng(3).standard_normal((3, 5))
    assert np.array_equal(transpose(transpose(a)), a)


def test_softmax_uniform_row():
    scores = np.array([[2.0, 2.0, 2.0]])
    out = masked_row_softmax(scores, np.zeros((1, 3)))
    assert np.allclose(out, 1.0 / 3.0, atol=1e-15)


def test_softmax_single_allowed_entry():
    scores = np.zeros((1, 2))
    mask = np.array([[0.0, -np.inf]])
    assert np.array_equal(masked_row_softmax(scores, mask), np.array([[1.0, 0.0]]))


def test_softmax_log2_row():
    scores = np.array([[np.log(2.0), 0.0]])
    out = masked_row_softmax(scores, np.zeros((1, 2)))
    assert np.abs(out - np.array([[2.0 / 3.0, 1.0 / 3.0]])).max() < 1e-15


def test_softmax_fully_masked_row_is_zero():
    scores = np.array([[5.0, -2.0]])
    mask = np.full((1, 2), -np.inf)
    out = masked_row_softmax(scores, mask)
    assert np.array_equal(out, np.zeros((1, 2)))


def test_softmax_shape_mismatch():
    with pytest.raises(ValueError):
        masked_row_softmax(np.zeros((2, 2)), np.zeros((2, 3)))


def test_softmax_rejects_bad_mask_values():
    with pytest.raises(ValueError):
        masked_row_softmax(np.zeros((1, 2)), np.array([[0.0, -1.0]]))


@given(st.integers(0, 2**32), st.integers(1, 8), st.integers(1, 8))
@settings(max_examples=80, deadline=None)
def test_softmax_row_stochastic_and_masked_zero(seed, rows, cols):
    rng = make_rng(seed)
    scores = rng.standard_normal((rows, cols)) * 5
    mask = np.where(rng.random((rows, cols)) < 0.4, -np.inf, 0.0)
    out = masked_row_softmax(scores, mask)
    assert np.all(out[np.isneginf(mask)] == 0.0)
    sums = out.sum(axis=1)
    open_rows = np.isfinite(mask).any(axis=1)
    assert np.all(np.abs(sums[open_rows] - 1.0) <= 1e-12)
    assert np.all(sums[~open_rows] == 0.0)


@given(st.integers(0, 2**32), st.floats(-30, 30))
@settings(max_examples=60, deadline=None)
def test_softmax_shift_invariance(seed, c):
    rng = make_rng(seed)
    scores = rng.standard_normal((3, 5))
    mask = np.where(rng.random((3, 5)) < 0.3, -np.inf, 0.0)
    base = masked_row_softmax(scores, mask)
    shifted = masked_row_softmax(scores + c, mask)
    assert np.abs(base - shifted).max() <= 1e-12


@given(st.integers(0, 2**32))
@settings(max_examples=40, deadline=None)
def test_softmax_backward_matches_finite_differences(seed):
    rng = make_rng(seed)
    scores = rng.standard_normal((3, 4))
    mask = np.where(rng.random((3, 4)) < 0.3, -np.inf, 0.0)
    g = rng.standard_normal((3, 4))
    w = masked_row_softmax(scores, mask)
    analytic = softmax_backward(w, g)
    h = 1e-6
    numeric = np.zeros_like(scores)
    for i in range(3):
        for j in range(4):
            up, down = scores.copy(), scores.copy()
            up[i, j] += h
            down[i, j] -= h
            f_up = float(np.sum(masked_row_softmax(up, mask) * g))
            f_down = float(np.sum(masked_row_softmax(down, mask) * g))
            numeric[i, j] = (f_up - f_down) / (2 * h)
    assert np.abs(analytic - numeric).max() < 1e-6
