"""Tests for Fill-Sketch, the union law and b-bit features."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastsketch.baselines import exact_jaccard
from fastsketch.errors import ContractViolation, EmptyInput, IncompatibleSketches
from fastsketch.hashing import KeyedHasher, new_hasher
from fastsketch.sketch import (
    FeatureVector,
    Sketch,
    SketchValue,
    dot_estimate,
    estimate_jaccard,
    featurize_bbit,
    fill_sketch,
    match_count,
    match_indicators,
    reference_sketch,
    union_sketch,
)

small_sets = st.sets(st.integers(min_value=0, max_value=1 << 40), min_size=1, max_size=32)
sizes = st.integers(min_value=1, max_value=32)
seeds = st.integers(min_value=0, max_value=(1 << 64) - 1)


class TestFillSketch:
    @settings(max_examples=200)
    @given(elements=small_sets, t=sizes, seed=seeds)
    def test_equals_definition(self, elements, t, seed):
        hasher = new_hasher(seed)
        assert fill_sketch(elements, t, hasher) == reference_sketch(elements, t, hasher)

    @settings(max_examples=20)
    @given(
        elements=st.sets(st.integers(0, 1 << 62), min_size=64, max_size=200),
        t=st.integers(1, 64),
        seed=seeds,
    )
    def test_vectorized_path_equals_definition(self, elements, t, seed):
        hasher = new_hasher(seed)
        assert fill_sketch(elements, t, hasher) == reference_sketch(elements, t, hasher)

    def test_keyed_hasher_equals_definition(self):
        hasher = KeyedHasher(3)
        elements = [1, 2, 3, 4, 5]
        assert fill_sketch(elements, 8, hasher) == reference_sketch(elements, 8, hasher)

    def test_single_element(self, hasher):
        sketch = fill_sketch([42], 16, hasher)
        assert sketch.t == 16
        assert sketch.is_filled
        assert all(0 <= e.round < 32 for e in sketch.entries)
        assert sketch.hash_evals <= 32

    def test_identical_sets(self, hasher):
        a = fill_sketch([1, 2, 3], 16, hasher)
        assert a == fill_sketch([3, 2, 1, 1], 16, hasher)
        assert estimate_jaccard(a, a) == 1.0

    def test_disjoint_sets(self):
        hasher = new_hasher(0)
        a = fill_sketch(range(0, 50), 16, hasher)
        b = fill_sketch(range(1000, 1050), 16, hasher)
        assert estimate_jaccard(a, b) == 0.0

    def test_empty_set(self, hasher):
        with pytest.raises(EmptyInput):
            fill_sketch([], 16, hasher)

    @pytest.mark.parametrize("t", [0, -1, 40_000])
    def test_bad_t(self, hasher, t):
        with pytest.raises(ContractViolation):
            fill_sketch([1], t, hasher)

    def test_rounds_monotone_with_values(self, hasher):
        sketch = fill_sketch(range(100), 32, hasher)
        assert all(SketchValue(0, 0) <= e < sketch.sentinel for e in sketch.entries)

    def test_early_exit(self, hasher):
        elements = list(range(10_000))
        sketch = fill_sketch(elements, 16, hasher)
        # every bin is hit in round 0 with overwhelming probability
        assert sketch.hash_evals == len(elements)
        assert all(e.round == 0 for e in sketch.entries)

    def test_wrong_entry_count(self):
        with pytest.raises(ContractViolation):
            Sketch(t=2, entries=(SketchValue(0, 0),), seed=0)


class TestUnion:
    @settings(max_examples=200)
    @given(a=small_sets, b=small_sets, t=sizes, seed=seeds)
    def test_union_law(self, a, b, t, seed):
        hasher = new_hasher(seed)
        sa = fill_sketch(a, t, hasher)
        sb = fill_sketch(b, t, hasher)
        assert union_sketch(sa, sb) == fill_sketch(a | b, t, hasher)

    def test_incompatible(self):
        sa = fill_sketch([1], 8, new_hasher(1))
        with pytest.raises(IncompatibleSketches):
            union_sketch(sa, fill_sketch([1], 8, new_hasher(2)))
        with pytest.raises(IncompatibleSketches):
            union_sketch(sa, fill_sketch([1], 16, new_hasher(1)))


class TestEstimator:
    def test_indicators(self, hasher):
        sa = fill_sketch([1, 2], 16, hasher)
        sb = fill_sketch([2, 3], 16, hasher)
        indicators = match_indicators(sa, sb)
        assert len(indicators) == 16
        assert set(indicators) <= {0, 1}
        assert match_count(sa, sb) == sum(indicators)
        assert estimate_jaccard(sa, sb) == sum(indicators) / 16

    def test_lattice(self, hasher):
        sa = fill_sketch([1, 2], 16, hasher)
        sb = fill_sketch([2, 3], 16, hasher)
        assert estimate_jaccard(sa, sb) * 16 == int(estimate_jaccard(sa, sb) * 16)

    def test_mean_near_jaccard(self):
        a, b = [1, 2], [2, 3]
        estimates = []
        for seed in range(2000):
            hasher = new_hasher(seed)
            estimates.append(estimate_jaccard(fill_sketch(a, 16, hasher), fill_sketch(b, 16, hasher)))
        assert abs(np.mean(estimates) - exact_jaccard(a, b)) < 0.01


class TestFeatures:
    def test_self_dot(self, hasher):
        fa = featurize_bbit(fill_sketch([1, 2, 3], 16, hasher), 8)
        assert dot_estimate(fa, fa) == 16

    def test_block_layout(self, hasher):
        sketch = fill_sketch([5, 6], 16, hasher)
        features = featurize_bbit(sketch, 4)
        for j, index in enumerate(features.indices):
            assert index == (j << 4) + (sketch.entries[j].fraction & 0xF)
            assert j * 16 <= index < (j + 1) * 16
        dense = features.to_dense()
        assert dense.shape == (16 * 16,)
        assert dense.sum() == 16
        assert features.dimension == 256

    def test_no_equal_blocks(self):
        fa = FeatureVector(b=1, t=2, indices=(0, 2))
        fb = FeatureVector(b=1, t=2, indices=(1, 3))
        assert dot_estimate(fa, fb) == 0

    def test_dot_at_least_matches(self):
        rng = np.random.default_rng(5)
        for seed in range(100):
            hasher = new_hasher(seed)
            a = rng.integers(0, 50, size=20).tolist()
            b = rng.integers(0, 50, size=20).tolist()
            sa, sb = fill_sketch(a, 32, hasher), fill_sketch(b, 32, hasher)
            dot = dot_estimate(featurize_bbit(sa, 2), featurize_bbit(sb, 2))
            assert dot >= match_count(sa, sb)

    def test_collision_model(self):
        a, b = [1, 2], [2, 3]
        ratios = []
        for seed in range(2000):
            hasher = new_hasher(seed)
            fa = featurize_bbit(fill_sketch(a, 16, hasher), 8)
            fb = featurize_bbit(fill_sketch(b, 16, hasher), 8)
            ratios.append(dot_estimate(fa, fb) / 16)
        expected = 1 / 3 + (2 / 3) * 2**-8
        assert abs(np.mean(ratios) - expected) < 0.015

    @pytest.mark.parametrize("b", [0, 17])
    def test_b_range(self, hasher, b):
        with pytest.raises(ContractViolation):
            featurize_bbit(fill_sketch([1], 4, hasher), b)

    def test_shape_mismatch(self):
        with pytest.raises(IncompatibleSketches):
            dot_estimate(FeatureVector(1, 2, (0, 2)), FeatureVector(2, 2, (0, 4)))
