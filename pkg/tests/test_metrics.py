"""Ranking and threshold metrics against independent oracles."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snn.dataset import Dataset, checkerboard_split
from snn.errors import DataError
from snn.metrics import (
    auroc,
    confusion,
    cv_auroc_ci,
    optimal_threshold,
    roc_curve,
    success_rate_curve,
)

from conftest import auroc_pairwise, make_dataset


class TestAuroc:
    def test_frozen_small_example(self):
        scores = np.array([0.1, 0.4, 0.35, 0.8])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        # pairs won: (.35>.1), (.8>.1), (.8>.4); lost: (.35<.4) -> 3/4
        assert auroc(scores, y) == pytest.approx(0.75)

    def test_perfect_and_inverted(self):
        y = np.array([0.0, 0.0, 1.0, 1.0])
        assert auroc(np.array([0.1, 0.2, 0.8, 0.9]), y) == pytest.approx(1.0)
        assert auroc(np.array([0.9, 0.8, 0.2, 0.1]), y) == pytest.approx(0.0)

    def test_all_tied_is_half(self):
        y = np.array([0.0, 1.0, 0.0, 1.0])
        assert auroc(np.zeros(4), y) == pytest.approx(0.5)

    def test_complement_identity(self):
        rng = np.random.default_rng(0)
        scores = rng.normal(size=100)
        y = (rng.random(100) < 0.4).astype(float)
        assert auroc(scores, y) + auroc(-scores, y) == pytest.approx(1.0)

    def test_single_class_rejected(self):
        with pytest.raises(DataError):
            auroc(np.array([0.1, 0.2]), np.array([1.0, 1.0]))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000))
    def test_matches_pairwise_oracle_with_ties(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 60))
        # quantized scores force plenty of ties
        scores = np.round(rng.normal(size=n), 1)
        y = (rng.random(n) < 0.5).astype(float)
        if y.min() == y.max():
            y[0] = 1.0 - y[0]
        assert auroc(scores, y) == pytest.approx(auroc_pairwise(scores, y),
                                                 abs=1e-12)


class TestConfusion:
    def test_frozen_counts(self):
        y = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0], dtype=float)
        scores = np.array([0.9, 0.7, 0.3, 0.6, 0.2, 0.1, 0.05, 0.15, 0.25, 0.35])
        cm = confusion(scores, y, threshold=0.5)
        assert (cm.tp, cm.fn, cm.fp, cm.tn) == (2, 1, 1, 6)
        assert cm.accuracy == pytest.approx(0.8)
        assert cm.pod == pytest.approx(2 / 3)
        assert cm.pofd == pytest.approx(1 / 7)

    def test_threshold_is_inclusive(self):
        cm = confusion(np.array([0.5, 0.3]), np.array([1.0, 0.0]),
                       threshold=0.5)
        assert cm.tp == 1 and cm.fn == 0 and cm.tn == 1


class TestRocCurve:
    def test_monotone_and_bounded(self):
        rng = np.random.default_rng(1)
        scores = rng.normal(size=200)
        y = (rng.random(200) < 0.5).astype(float)
        curve = roc_curve(scores, y)
        assert np.all(np.diff(curve.fpr) >= 0)
        assert np.all(np.diff(curve.tpr) >= 0)
        assert curve.fpr[0] == 0.0 and curve.fpr[-1] == 1.0
        assert curve.tpr[0] == 0.0 and curve.tpr[-1] == 1.0

    def test_optimal_threshold_nearest_ideal_corner(self):
        rng = np.random.default_rng(2)
        scores = rng.normal(size=300)
        y = (rng.random(300) < 0.5).astype(float)
        scores[y == 1] += 1.0
        curve = roc_curve(scores, y)
        t, fpr, tpr = optimal_threshold(curve)
        d = np.sqrt(curve.fpr**2 + (1.0 - curve.tpr) ** 2)
        assert np.hypot(fpr, 1.0 - tpr) == pytest.approx(d.min())
        # the returned point is consistent with re-thresholding the scores
        cm = confusion(scores, y, t)
        assert cm.pod == pytest.approx(tpr)
        assert cm.pofd == pytest.approx(fpr)


class TestSuccessRate:
    def test_perfect_ranking_captures_everything_early(self):
        scores = np.array([0.9, 0.8, 0.3, 0.2, 0.1])
        y = np.array([1.0, 1.0, 0.0, 0.0, 0.0])
        sr = success_rate_curve(scores, y)
        # after flagging the top 40% of cells, all positives are captured
        idx = np.searchsorted(sr.flagged, 0.4)
        assert sr.captured[idx] == pytest.approx(1.0)
        assert sr.captured[-1] == pytest.approx(1.0)

    def test_area_between_half_and_one(self):
        rng = np.random.default_rng(3)
        scores = rng.normal(size=100)
        y = (rng.random(100) < 0.3).astype(float)
        scores[y == 1] += 2.0
        sr = success_rate_curve(scores, y)
        assert 0.5 < sr.area <= 1.0


class TestCvAurocCi:
    def test_exactly_ten_trials_and_separable_ci(self):
        ds = checkerboard_split(make_dataset(400, 2, seed=4, separation=6.0),
                                train_fraction=0.6, block=10, seed=0)
        calls = []

        def train_eval(d, tr_idx, te_idx):
            calls.append((tr_idx.size, te_idx.size))
            return auroc(d.X[te_idx, 0], d.y[te_idx])

        out = cv_auroc_ci(train_eval, ds, trials=10, seed=0)
        assert len(calls) == 10
        assert len(out.aurocs) == 10
        assert out.ci_low > 0.95
        assert out.ci_low <= out.mean <= out.ci_high

    def test_deterministic_given_seed(self):
        ds = checkerboard_split(make_dataset(200, 2, seed=5), block=10)

        def train_eval(d, tr_idx, te_idx):
            return auroc(d.X[te_idx, 0], d.y[te_idx])

        a = cv_auroc_ci(train_eval, ds, trials=5, seed=3)
        b = cv_auroc_ci(train_eval, ds, trials=5, seed=3)
        assert a.aurocs == b.aurocs
