"""Tests for the tabulation hasher and the digest helpers."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fastsketch.config import MASK64, MAX_T, OPH_CODE, PROBE_CODE, TOKEN_SEED, VECTORIZE_THRESHOLD
from fastsketch.errors import ContractViolation
from fastsketch.hashing import (
    HashOutput,
    KeyedHasher,
    SketchHasher,
    check_t,
    derive_seed,
    element_ids,
    fingerprint,
    new_hasher,
    reduce_to_bin,
    reduce_to_bin_array,
    shingles,
    tokenize,
)
from fastsketch.sketch import estimate_jaccard, fill_sketch

words64 = st.integers(min_value=0, max_value=MASK64)

DRAWS = 100_000


def _tabulate(hasher, code, key):
    """Plain table lookups over the 80-bit key (key | code << 64)."""
    packed = key | code << 64
    b = f = d = 0
    for i in range(10):
        row = hasher.tables[i, (packed >> (8 * i)) & 0xFF]
        b ^= int(row[0])
        f ^= int(row[1])
        d ^= int(row[2])
    for k in range(4):
        row = hasher.derived_tables[k, (d >> (8 * k)) & 0xFF]
        b ^= int(row[0])
        f ^= int(row[1])
    return b, f


def _bin_counts(hasher, code, t, draws=DRAWS):
    bins, _ = hasher.batch(list(range(draws))).words(code)
    words = np.asarray([int(w) for w in bins], dtype=np.uint64)
    return np.bincount(reduce_to_bin_array(words, t), minlength=t)


class TestSketchHasher:
    def test_deterministic_per_seed(self):
        a, b = SketchHasher(7), SketchHasher(7)
        assert a.words(3, 12345) == b.words(3, 12345)
        assert np.array_equal(a.tables, b.tables)

    def test_seeds_differ(self):
        assert SketchHasher(1).words(0, 99) != SketchHasher(2).words(0, 99)

    def test_rounds_differ(self, hasher):
        assert hasher.words(0, 5) != hasher.words(1, 5)

    def test_tables_read_only(self, hasher):
        with pytest.raises(ValueError):
            hasher.tables[0, 0, 0] = 1

    def test_shape(self, hasher):
        assert hasher.c == 10
        assert hasher.d == 4
        assert hasher.tables.shape == (10, 256, 3)
        assert hasher.derived_tables.shape == (4, 256, 2)
        assert int(hasher.tables[:, :, 2].max()) < 1 << 32

    @given(key=words64, code=st.integers(min_value=0, max_value=PROBE_CODE))
    def test_words_in_range(self, key, code):
        b, f = SketchHasher(11).words(code, key)
        assert 0 <= b <= MASK64
        assert 0 <= f <= MASK64

    def test_rejects_out_of_range(self, hasher):
        with pytest.raises(ContractViolation):
            hasher.words(0, -1)
        with pytest.raises(ContractViolation):
            hasher.words(0, 1 << 64)
        with pytest.raises(ContractViolation):
            hasher.words(1 << 16, 0)

    @pytest.mark.parametrize("size", [1, 5, VECTORIZE_THRESHOLD - 1, VECTORIZE_THRESHOLD, 300])
    @pytest.mark.parametrize("code", [0, 1, 17, OPH_CODE, PROBE_CODE])
    def test_batch_paths_agree_with_scalar(self, hasher, size, code):
        rng = np.random.default_rng(size)
        keys = sorted(set(rng.integers(0, MASK64, size=size, dtype=np.uint64, endpoint=True).tolist()))
        bins, fracs = hasher.batch(keys).words(code)
        expected = [hasher.words(code, k) for k in keys]
        assert [int(b) for b in bins] == [e[0] for e in expected]
        assert [int(f) for f in fracs] == [e[1] for e in expected]

    def test_batch_vectorizes_large_inputs(self, hasher):
        assert not hasher.batch(list(range(VECTORIZE_THRESHOLD - 1))).vectorized
        assert hasher.batch(list(range(VECTORIZE_THRESHOLD))).vectorized

    def test_hash_round_bins(self, hasher):
        t = 16
        for rnd in range(t):
            out = hasher.hash_round(rnd, 42, t)
            assert out.bin == reduce_to_bin(hasher.words(rnd, 42)[0], t)
        for rnd in range(t, 2 * t):
            assert hasher.hash_round(rnd, 42, t).bin == rnd - t

    def test_late_rounds_land_in_their_bin(self, hasher):
        for t in range(1, 65):
            for rnd in range(t, 2 * t):
                for key in (0, 17, MASK64):
                    assert hasher.hash_round(rnd, key, t).bin == rnd - t, (t, rnd, key)

    def test_hash_round_rejects_bad_round(self, hasher):
        with pytest.raises(ContractViolation):
            hasher.hash_round(32, 1, 16)

    def test_matches_table_lookups(self):
        hasher = SketchHasher(7)
        b, f = _tabulate(hasher, 3, 17)
        assert hasher.hash_round(3, 17, 16) == HashOutput((b * 16) >> 64, f)

    @given(key=words64, code=st.integers(min_value=0, max_value=PROBE_CODE))
    def test_words_match_table_lookups(self, key, code):
        hasher = SketchHasher(7)
        assert hasher.words(code, key) == _tabulate(hasher, code, key)


class TestHashStatistics:
    @pytest.mark.parametrize("code", [0, 5])
    def test_bin_law(self, code):
        t = 16
        counts = _bin_counts(SketchHasher(42), code, t)
        p = 1 / t
        z = (counts - DRAWS * p) / np.sqrt(DRAWS * p * (1 - p))
        assert np.abs(z).max() <= 5, z

    def test_fraction_mean(self):
        _, fractions = SketchHasher(42).batch(list(range(DRAWS))).words(0)
        values = np.asarray([int(f) for f in fractions], dtype=np.float64) / 2.0**64
        assert abs(values.mean() - 0.5) <= 0.01

    def test_token_collisions(self):
        words = [f"w{i}" for i in range(DRAWS + 1)]
        texts = shingles(words, 2)
        assert len(set(texts)) == DRAWS
        digests = {tokenize(s, TOKEN_SEED) for s in texts}
        assert DRAWS - len(digests) <= 1


class TestKeyedHasher:
    def test_same_interface(self):
        h = KeyedHasher(5)
        out = h.hash_round(3, 77, 8)
        assert 0 <= out.bin < 8
        assert h.words(3, 77) == KeyedHasher(5).words(3, 77)
        assert h.words(3, 77) != KeyedHasher(6).words(3, 77)

    def test_scalar_batch(self):
        h = KeyedHasher(5)
        bins, fracs = h.batch([1, 2, 3]).words(4)
        assert list(zip(bins, fracs)) == [h.words(4, k) for k in (1, 2, 3)]

    def test_bin_frequencies_agree_with_tabulation(self):
        t, draws = 16, 20_000
        tab = _bin_counts(SketchHasher(42), 0, t, draws) / draws
        keyed = _bin_counts(KeyedHasher(42), 0, t, draws) / draws
        sigma = np.sqrt(2 * (1 / t) * (1 - 1 / t) / draws)
        assert np.abs(tab - keyed).max() <= 5 * sigma

    def test_estimates_agree_with_tabulation(self):
        a, b, trials = [1, 2], [2, 3], 2000

        def estimates(make):
            values = []
            for seed in range(trials):
                h = make(seed)
                values.append(estimate_jaccard(fill_sketch(a, 16, h), fill_sketch(b, 16, h)))
            return np.asarray(values)

        tab = estimates(SketchHasher)
        keyed = estimates(KeyedHasher)
        sigma = np.sqrt((tab.var(ddof=1) + keyed.var(ddof=1)) / trials)
        assert abs(tab.mean() - keyed.mean()) <= 5 * sigma
        assert abs(keyed.mean() - 1 / 3) <= 4 * np.sqrt((1 / 3) * (2 / 3) / (16 * trials))


class TestReduction:
    @given(word=words64, t=st.integers(min_value=1, max_value=MAX_T))
    def test_reduce_in_range(self, word, t):
        assert 0 <= reduce_to_bin(word, t) < t

    def test_extremes(self):
        assert reduce_to_bin(0, 16) == 0
        assert reduce_to_bin(MASK64, 16) == 15
        assert reduce_to_bin(1 << 63, 16) == 8

    @given(words=st.lists(words64, min_size=1, max_size=50), t=st.integers(1, MAX_T))
    def test_array_matches_scalar(self, words, t):
        array = np.asarray(words, dtype=np.uint64)
        assert reduce_to_bin_array(array, t).tolist() == [reduce_to_bin(w, t) for w in words]


class TestHelpers:
    def test_element_ids_sorted_unique(self):
        assert element_ids([5, 1, 5, 3]) == [1, 3, 5]

    def test_element_ids_range(self):
        with pytest.raises(ContractViolation):
            element_ids([-1])
        with pytest.raises(ContractViolation):
            element_ids([1 << 64])

    def test_check_t(self):
        check_t(1)
        check_t(MAX_T)
        for bad in (0, MAX_T + 1):
            with pytest.raises(ContractViolation):
                check_t(bad)

    def test_tokenize(self):
        assert tokenize("apple", 1) == tokenize(b"apple", 1)
        assert tokenize("apple", 1) != tokenize("apple", 2)
        assert tokenize("apple", 1) != tokenize("apples", 1)

    def test_fingerprint_and_derive_seed(self):
        assert fingerprint(b"abc", 3) == fingerprint(b"abc", 3)
        assert fingerprint(b"abc", 3) != fingerprint(b"abd", 3)
        streams = {derive_seed(9, s) for s in range(4)}
        assert len(streams) == 4
        assert derive_seed(9, 0) != derive_seed(10, 0)

    def test_new_hasher(self):
        assert new_hasher(3).seed == 3
        assert new_hasher(-1).seed == MASK64

    def test_shingles(self):
        assert shingles(["a", "b", "c"], 2) == [b"a b", b"b c"]
        assert shingles(["a"], 3) == [b"a"]
        assert shingles([], 2) == []
        with pytest.raises(ContractViolation):
            shingles(["a"], 0)
