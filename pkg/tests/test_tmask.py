import numpy as np
import pytest

from fmmlab.optflow import FlowScores
from fmmlab.tmask import (
    TemporalMask,
    flow_mask,
    full_mask,
    random_mask,
    sequence_mask,
    sparsity_of,
)


class TestFlowMask:
    def test_top_two_by_value(self):
        m = flow_mask(FlowScores((0.1, 0.9, 0.5, 0.9)), sparsity=0.5)
        assert m.indices() == (1, 3)

    def test_tie_breaks_to_lower_index(self):
        m = flow_mask(FlowScores((0.5, 0.5, 0.2)), sparsity=2.0 / 3.0)
        assert m.indices() == (0,)

    def test_sparsity_zero_selects_all(self):
        m = flow_mask(FlowScores((0.0, 0.3, 0.2)), sparsity=0.0)
        assert m.k == 3

    def test_invariant_under_monotone_rescaling(self):
        scores = (0.12, 0.8, 0.33, 0.9, 0.05, 0.61)
        for f in (lambda s: 10 * s, lambda s: s**3, lambda s: np.expm1(s)):
            a = flow_mask(FlowScores(scores), 0.5)
            b = flow_mask(FlowScores(tuple(float(f(s)) for s in scores)), 0.5)
            assert a.indices() == b.indices()

    def test_realized_sparsity_within_rounding_slack(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            t = int(rng.integers(2, 20))
            sparsity = float(rng.uniform())
            m = flow_mask(FlowScores(tuple(rng.uniform(size=t))), sparsity)
            assert abs(sparsity_of(m) - sparsity) <= 1.0 / (2.0 * t) + 1e-12

    def test_empty_scores_rejected(self):
        with pytest.raises(ValueError):
            flow_mask(FlowScores(()), 0.5)


class TestSequenceMask:
    def test_prefix_window(self):
        assert sequence_mask(10, 0.8, start=0).indices() == (0, 1)

    def test_suffix_window(self):
        assert sequence_mask(10, 0.8, start=8).indices() == (8, 9)

    def test_overflow_rejected(self):
        with pytest.raises(ValueError):
            sequence_mask(10, 0.8, start=9)


class TestRandomMask:
    def test_deterministic_in_seed(self):
        a = random_mask(12, 0.5, seed=7)
        b = random_mask(12, 0.5, seed=7)
        c = random_mask(12, 0.5, seed=8)
        assert a.selected == b.selected
        assert a.selected != c.selected or a.k == c.k  # same K either way

    def test_sparsity_zero_selects_all(self):
        assert random_mask(6, 0.0, seed=0).k == 6

    def test_uniform_selection_frequency(self):
        t, sparsity = 10, 0.8  # K = 2
        counts = np.zeros(t)
        n = 1000
        for seed in range(n):
            counts[list(random_mask(t, sparsity, seed).indices())] += 1
        freq = counts / n
        assert np.all(np.abs(freq - 0.2) <= 0.05)


class TestSparsity:
    @pytest.mark.parametrize(
        "k,t,expected", [(0, 10, 1.0), (8, 10, 0.2), (10, 10, 0.0)]
    )
    def test_arithmetic(self, k, t, expected):
        m = TemporalMask(tuple(i < k for i in range(t)))
        assert sparsity_of(m) == pytest.approx(expected, abs=1e-15)

    def test_exact_k_counts(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            t = int(rng.integers(2, 15))
            s = float(rng.uniform())
            k = flow_mask(FlowScores(tuple(rng.uniform(size=t))), s).k
            assert sequence_mask(t, s, start=0).k == k
            assert random_mask(t, s, seed=3).k == k

    def test_full_mask(self):
        m = full_mask(5)
        assert m.k == 5 and sparsity_of(m) == 0.0
