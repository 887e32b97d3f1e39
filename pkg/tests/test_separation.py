"""Tests for the sequential threshold test."""

import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fastsketch.bounds import separation_above_lower_bound, separation_above_upper_bound
from fastsketch.errors import ContractViolation, IncompatibleSketches
from fastsketch.hashing import new_hasher
from fastsketch.separation import Decision, SeparationParams, separate, separate_sketches
from fastsketch.sketch import fill_sketch


class TestParams:
    def test_thresholds(self):
        params = SeparationParams(t=8, r=1, gamma=0.5)
        assert len(params.thresholds) == 8
        assert params.thresholds[0] == pytest.approx(1.5)
        assert params.thresholds[7] == pytest.approx(8 * 0.5 + 4.0)

    @pytest.mark.parametrize(
        ("t", "r", "gamma"),
        [(0, 1, 0.5), (4, 0, 0.5), (4, 5, 0.5), (4, 2, -0.1), (4, 2, 1.5)],
    )
    def test_invalid(self, t, r, gamma):
        with pytest.raises(ContractViolation):
            SeparationParams(t=t, r=r, gamma=gamma)

    def test_check_gap(self, caplog):
        assert SeparationParams(t=100, r=64, gamma=0.5).check_gap(0.5)
        with caplog.at_level(logging.WARNING):
            assert not SeparationParams(t=100, r=10, gamma=0.5).check_gap(0.5)
        assert "burn-in" in caplog.text
        with pytest.raises(ContractViolation):
            SeparationParams(t=4, r=1, gamma=0.5).check_gap(0)


class TestSeparate:
    def test_all_zeros_below_at_burn_in(self):
        result = separate([0.0] * 16, SeparationParams(t=16, r=5, gamma=0.5))
        assert result.decision is Decision.BELOW
        assert result.iterations == 5
        assert not result.above

    def test_all_ones_above(self):
        result = separate([1.0] * 16, SeparationParams(t=16, r=9, gamma=0.5))
        assert result.above
        assert result.iterations == 16

    def test_alternating_high_gamma(self):
        x = [1.0, 0.0] * 8
        result = separate(x, SeparationParams(t=16, r=4, gamma=0.9))
        assert result.decision is Decision.BELOW
        assert result.iterations == 4

    def test_tie_goes_below(self):
        # S_1 = 1 = 1 * 0 + 1
        result = separate([1.0], SeparationParams(t=1, r=1, gamma=0.0))
        assert result.decision is Decision.BELOW

    def test_length_mismatch(self):
        with pytest.raises(ContractViolation):
            separate([1.0] * 3, SeparationParams(t=4, r=1, gamma=0.5))

    @given(
        x=st.lists(st.floats(0, 1), min_size=1, max_size=40),
        gamma=st.floats(0, 1),
        data=st.data(),
    )
    def test_raising_values_never_turns_above_into_below(self, x, gamma, data):
        r = data.draw(st.integers(1, len(x)))
        params = SeparationParams(t=len(x), r=r, gamma=gamma)
        higher = [min(1.0, v + 0.25) for v in x]
        if separate(x, params).above:
            assert separate(higher, params).above

    @given(x=st.lists(st.floats(0, 1), min_size=1, max_size=40), data=st.data())
    def test_below_iteration_at_least_r(self, x, data):
        r = data.draw(st.integers(1, len(x)))
        result = separate(x, SeparationParams(t=len(x), r=r, gamma=0.3))
        assert r <= result.iterations <= len(x)

    def test_sketches(self, hasher):
        sa = fill_sketch([1, 2, 3], 16, hasher)
        assert separate_sketches(sa, sa, SeparationParams(t=16, r=9, gamma=0.5)).above
        with pytest.raises(IncompatibleSketches):
            separate_sketches(sa, sa, SeparationParams(t=8, r=4, gamma=0.5))

    def test_disjoint_sketches_below(self):
        hasher = new_hasher(1)
        sa = fill_sketch(range(100), 64, hasher)
        sb = fill_sketch(range(200, 300), 64, hasher)
        result = separate_sketches(sa, sb, SeparationParams(t=64, r=16, gamma=0.25))
        assert result.decision is Decision.BELOW
        assert result.iterations == 16


@pytest.mark.slow
class TestGuarantees:
    trials = 10_000

    @staticmethod
    def _run(params, p, trials, seed):
        rng = np.random.default_rng(seed)
        streams = rng.random((trials, params.t)) < p
        return [separate(row.astype(float).tolist(), params) for row in streams]

    def test_above_when_mean_is_high(self):
        delta, r = 0.5, 64
        params = SeparationParams(t=512, r=r, gamma=0.25)
        results = self._run(params, params.gamma + delta, self.trials, 11)
        f = sum(res.above for res in results) / self.trials
        sigma = np.sqrt(f * (1 - f) / self.trials)
        assert f >= separation_above_lower_bound(delta, r) - 4 * sigma

    def test_below_when_mean_is_low(self):
        delta, r = 0.25, 16
        params = SeparationParams(t=256, r=r, gamma=0.5)
        results = self._run(params, params.gamma - delta, self.trials, 12)
        f = sum(res.above for res in results) / self.trials
        sigma = np.sqrt(f * (1 - f) / self.trials)
        assert f <= separation_above_upper_bound(delta, params.t) + 4 * sigma
        assert np.mean([res.iterations for res in results]) <= 4 * r
