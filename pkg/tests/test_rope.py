import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frameattn.numerics import make_rng
from frameattn.rope import (
    RopeConfig,
    apply_rotary,
    frequencies,
    pair_score,
    rotary_oracle,
    rotate_rows,
)


def test_frequency_values():
    assert frequencies(RopeConfig(d_head=6)).thetas[0] == 1.0
    f4 = frequencies(RopeConfig(d_head=4))
    assert abs(f4.thetas[1] - 0.01) < 1e-15  # 10000 ** -1/2
    f128 = frequencies(RopeConfig(d_head=128))
    assert abs(f128.thetas[16] - 0.1) < 1e-15  # 10000 ** -16/64


def test_frequency_table_shape_and_monotonicity():
    f = frequencies(RopeConfig(d_head=64))
    assert f.num_pairs == 32
    assert np.all(np.diff(f.thetas) < 0)
    assert np.all((f.thetas > 0) & (f.thetas <= 1))


@pytest.mark.parametrize("bad", [1, 3, 7, 0])
def test_odd_or_tiny_d_head_rejected(bad):
    with pytest.raises(ValueError):
        RopeConfig(d_head=bad)


def test_base_must_exceed_one():
    with pytest.raises(ValueError):
        RopeConfig(d_head=4, base=1.0)


def test_rotation_at_zero_is_identity():
    freqs = frequencies(RopeConfig(d_head=8))
    v = make_rng(1).standard_normal(8)
    assert np.array_equal(apply_rotary(v, 0.0, freqs), v)
    assert np.array_equal(rotary_oracle(v, 0.0, freqs), v)


def test_single_pair_rotation():
    freqs = frequencies(RopeConfig(d_head=2))
    out = apply_rotary(np.array([1.0, 0.0]), 1.0, freqs)
    assert np.abs(out - np.array([math.cos(1.0), math.sin(1.0)])).max() < 1e-15


def test_oracle_quarter_turn():
    freqs = frequencies(RopeConfig(d_head=2))
    out = rotary_oracle(np.array([0.0, 1.0]), math.pi / 2, freqs)
    assert np.abs(out - np.array([-1.0, 0.0])).max() < 1e-12


def test_length_mismatch_rejected():
    freqs = frequencies(RopeConfig(d_head=4))
    with pytest.raises(ValueError):
        apply_rotary(np.zeros(6), 1.0, freqs)
    with pytest.raises(ValueError):
        rotary_oracle(np.zeros(2), 1.0, freqs)
    with pytest.raises(ValueError):
        pair_score(np.zeros(4), np.zeros(2), 0.0, 0.0, freqs)


def test_non_finite_position_rejected():
    freqs = frequencies(RopeConfig(d_head=2))
    with pytest.raises(ValueError):
        apply_rotary(np.zeros(2), float("nan"), freqs)


@given(st.integers(0, 2**32), st.sampled_from([2, 8, 64, 128]), st.floats(-1000, 1000))
@settings(max_examples=150, deadline=None)
def test_oracle_equivalence(seed, d_head, position):
    freqs = frequencies(RopeConfig(d_head=d_head))
    v = make_rng(seed).standard_normal(d_head)
    fast = apply_rotary(v, position, freqs)
    ref = rotary_oracle(v, position, freqs)
    assert np.abs(fast - ref).max() < 1e-12


def test_oracle_equivalence_float32():
    rng = make_rng(11)
    freqs = frequencies(RopeConfig(d_head=16))
    for _ in range(50):
        v = rng.standard_normal(16).astype(np.float32)
        pos = float(rng.uniform(-100, 100))
        fast = apply_rotary(v, pos, freqs)
        ref = rotary_oracle(v, pos, freqs)
        assert fast.dtype == np.float32
        assert np.abs(fast.astype(np.float64) - ref.astype(np.float64)).max() < 1e-5


@given(st.integers(0, 2**32), st.floats(-300, 300))
@settings(max_examples=100, deadline=None)
def test_norm_preservation(seed, position):
    freqs = frequencies(RopeConfig(d_head=8))
    v = make_rng(seed).standard_normal(8)
    out = apply_rotary(v, position, freqs)
    assert abs(np.linalg.norm(out) - np.linalg.norm(v)) < 1e-12


@given(st.integers(0, 2**32), st.floats(-100, 100), st.floats(-100, 100))
@settings(max_examples=100, deadline=None)
def test_rotation_composition(seed, a, b):
    freqs = frequencies(RopeConfig(d_head=8))
    v = make_rng(seed).standard_normal(8)
    twice = apply_rotary(apply_rotary(v, a, freqs), b, freqs)
    once = apply_rotary(v, a + b, freqs)
    assert np.abs(twice - once).max() < 1e-12


def test_pair_score_equal_positions_is_plain_dot():
    rng = make_rng(5)
    freqs = frequencies(RopeConfig(d_head=8))
    q, k = rng.standard_normal(8), rng.standard_normal(8)
    assert abs(pair_score(q, k, 3.25, 3.25, freqs) - float(np.dot(q, k))) < 1e-12


@given(st.integers(0, 2**32), st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
@settings(max_examples=100, deadline=None)
def test_pair_score_depends_on_relative_position(seed, pq, pk, shift):
    rng = make_rng(seed)
    freqs = frequencies(RopeConfig(d_head=8))
    q, k = rng.standard_normal(8), rng.standard_normal(8)
    a = pair_score(q, k, pq, pk, freqs)
    b = pair_score(q, k, pq + shift, pk + shift, freqs)
    assert abs(a - b) < 1e-9


def test_pair_score_single_pair_cosine():
    freqs = frequencies(RopeConfig(d_head=2))
    v = np.array([1.0, 0.0])
    assert abs(pair_score(v, v, 1.0, 0.0, freqs) - math.cos(1.0)) < 1e-15


def test_rotate_rows_matches_apply_rotary():
    rng = make_rng(9)
    freqs = frequencies(RopeConfig(d_head=6))
    mat = rng.standard_normal((5, 6))
    positions = rng.uniform(-20, 20, 5)
    rows = rotate_rows(mat, positions, freqs)
    for r in range(5):
        assert np.array_equal(rows[r], apply_rotary(mat[r], positions[r], freqs))


def test_rotate_rows_validates_shapes():
    freqs = frequencies(RopeConfig(d_head=4))
    with pytest.raises(ValueError):
        rotate_rows(np.zeros((3, 6)), np.zeros(3), freqs)
    with pytest.raises(ValueError):
        rotate_rows(np.zeros((3, 4)), np.zeros(4), freqs)
