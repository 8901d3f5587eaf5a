"""Reference models: hydrologic failure index, likelihood ratios, logistic
regression, and the dense MLP."""

from __future__ import annotations

import numpy as np
import pytest

from snn.baselines import (
    FiParams,
    collinearity_screen,
    failure_index,
    load_logr,
    load_lr,
    logr_score,
    logr_train,
    lr_score,
    lr_train,
    minmax_categorize,
    MlpConfig,
    mlp_baseline_train,
    mlp_score,
    save_logr,
    save_lr,
    wetness,
)
from snn.dataset import Dataset, RasterGrid
from snn.errors import DataError
from snn.metrics import auroc

from conftest import make_dataset


def _grid(vals) -> RasterGrid:
    return RasterGrid(np.asarray(vals, dtype=float), cellsize=30.0)


class TestWetness:
    def test_matches_formula_and_clamps(self):
        params = FiParams(t_trans=1e-4, b=30.0)
        slope = _grid([[1.0, 0.5]])
        area = _grid([[100.0, 40000.0]])
        q = _grid([[1e-5, 1e-5]])
        w = wetness(q, area, slope, params)
        sin1 = 1.0 / np.hypot(1.0, 1.0)
        expect0 = (1e-5 * 100.0) / (30.0 * 1e-4 * sin1)
        assert w.values[0, 0] == pytest.approx(expect0)
        assert w.values[0, 1] == 1.0  # huge drainage area saturates

    def test_zero_slope_is_nodata(self):
        slope = _grid([[0.0, 1.0]])
        area = _grid([[100.0, 100.0]])
        q = _grid([[1e-5, 1e-5]])
        w = wetness(q, area, slope)
        assert not w.mask()[0, 0]
        assert w.mask()[0, 1]


class TestFailureIndex:
    def test_dry_identity(self):
        # W = 0: FI is exactly the slope ratio S / S0
        slope = _grid([[0.3, 0.8]])
        w = _grid([[0.0, 0.0]])
        fi = failure_index(slope, w, FiParams(s0=1.0))
        assert np.array_equal(fi.values, slope.values)

    def test_saturated_identity(self):
        # W = 1 with rho_w/rho_s = 1/2: FI doubles the dry value
        slope = _grid([[0.3, 0.8]])
        w = _grid([[1.0, 1.0]])
        params = FiParams(s0=1.0, rho_w=1.0, rho_s=2.0)
        fi = failure_index(slope, w, params)
        assert np.allclose(fi.values, 2.0 * slope.values)

    def test_out_of_range_wetness_rejected(self):
        slope = _grid([[0.3]])
        with pytest.raises(DataError):
            failure_index(slope, _grid([[1.5]]))

    def test_params_validated(self):
        with pytest.raises(ValueError):
            FiParams(rho_w=3.0, rho_s=2.0)
        with pytest.raises(ValueError):
            FiParams(s0=0.0)


class TestLikelihoodRatio:
    def test_area_weighted_mean_is_one(self):
        # weighting each cell's LR by its share of training rows recovers 1
        ds = make_dataset(800, 3, seed=0)
        model = lr_train(ds)
        tr = ds.train_indices()
        for j, name in enumerate(ds.feature_names):
            col = ds.X[tr, j]
            idx = np.searchsorted(model.edges[name], col, side="right")
            counts = np.bincount(idx, minlength=model.ratios[name].size)
            mean = float(np.sum(model.ratios[name] * counts) / counts.sum())
            assert mean == pytest.approx(1.0, abs=1e-6)

    def test_informative_feature_scores_sensibly(self):
        ds = make_dataset(1000, 2, seed=1, separation=2.5)
        model = lr_train(ds)
        assert auroc(lr_score(model, ds.X), ds.y) > 0.85

    def test_save_load_round_trip(self, tmp_path):
        ds = make_dataset(300, 2, seed=2)
        model = lr_train(ds)
        save_lr(model, tmp_path / "lr.json")
        back = load_lr(tmp_path / "lr.json")
        assert np.array_equal(lr_score(model, ds.X), lr_score(back, ds.X))

    def test_unseen_bin_scores_zero_lr(self):
        ds = make_dataset(300, 1, seed=3)
        model = lr_train(ds)
        far = np.array([[1e9]])
        out = lr_score(model, far)
        assert np.isfinite(out[0])


class TestLogisticRegression:
    def test_probability_half_at_zero_logit(self):
        ds = make_dataset(500, 2, seed=4, separation=2.0)
        model = logr_train(ds)
        # a point on the decision boundary (zero logit) must score exactly 1/2
        z = np.zeros(2)
        z[0] = -model.intercept / model.coef[0]
        X = model.standardizer.inverse(z[None, :])
        p = logr_score(model, X)
        assert p[0] == pytest.approx(0.5, abs=1e-9)

    def test_scores_are_probabilities(self):
        ds = make_dataset(500, 2, seed=5)
        model = logr_train(ds)
        p = logr_score(model, ds.X)
        assert np.all((p > 0.0) & (p < 1.0))

    def test_recovers_auroc_on_separable_data(self):
        ds = make_dataset(800, 2, seed=6, separation=2.5)
        model = logr_train(ds)
        assert auroc(logr_score(model, ds.X), ds.y) > 0.9

    def test_complete_separation_caps_and_warns(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(200, 2))
        y = (X[:, 0] > 0.0).astype(float)
        ds = Dataset(feature_names=("a", "b"), X=X, y=y)
        with pytest.warns(UserWarning, match="separab"):
            model = logr_train(ds)
        assert float(np.linalg.norm(model.coef)) <= 50.0 + 1e-9

    def test_collinear_features_rejected_by_name(self):
        rng = np.random.default_rng(8)
        base = rng.normal(size=300)
        X = np.column_stack([base, base * 2.0 + 1e-6 * rng.normal(size=300),
                             rng.normal(size=300)])
        y = (rng.random(300) < 0.5).astype(float)
        ds = Dataset(feature_names=("u", "v", "w"), X=X, y=y)
        with pytest.raises(DataError, match="u.*v|v.*u"):
            logr_train(ds)

    def test_screen_passes_independent_features(self):
        ds = make_dataset(400, 3, seed=9)
        result = collinearity_screen(ds)
        assert result.passed
        assert result.worst_pair is not None
        assert result.worst_abs_r <= 0.894

    def test_save_load_round_trip(self, tmp_path):
        ds = make_dataset(300, 2, seed=10, separation=1.5)
        model = logr_train(ds)
        save_logr(model, tmp_path / "m.json")
        back = load_logr(tmp_path / "m.json")
        assert np.array_equal(logr_score(model, ds.X), logr_score(back, ds.X))


class TestMinmaxCategorize:
    def test_output_hits_the_documented_extremes(self):
        rng = np.random.default_rng(11)
        v = rng.normal(size=1000)
        out = minmax_categorize(v)
        assert out.min() == pytest.approx(0.1)
        assert out.max() == pytest.approx(0.9)
        assert len(np.unique(out)) <= 10

    def test_monotone_in_the_input(self):
        v = np.linspace(-3, 3, 500)
        out = minmax_categorize(v)
        assert np.all(np.diff(out) >= 0)


class TestMlpBaseline:
    def test_beats_chance_with_margin_separation(self):
        # categorization keeps only coarse level information, so give the
        # classes a margin: |x0 + x1| > 0.6
        rng = np.random.default_rng(12)
        n = 3000
        X = rng.normal(size=(n, 2))
        s = X[:, 0] + X[:, 1]
        keep = np.abs(s) > 1.2
        X = X[keep][:800]
        y = (X[:, 0] + X[:, 1] > 0.0).astype(float)
        ds = Dataset(feature_names=("a", "b"), X=X, y=y)
        model = mlp_baseline_train(ds, MlpConfig(seed=0))
        assert auroc(mlp_score(model, ds.X), ds.y) >= 0.95

    def test_deterministic_given_seed(self):
        ds = make_dataset(300, 2, seed=13, separation=2.0)
        a = mlp_score(mlp_baseline_train(ds, MlpConfig(seed=3)), ds.X)
        b = mlp_score(mlp_baseline_train(ds, MlpConfig(seed=3)), ds.X)
        assert np.array_equal(a, b)

    def test_scores_in_unit_interval(self):
        ds = make_dataset(300, 2, seed=14)
        p = mlp_score(mlp_baseline_train(ds, MlpConfig(seed=0)), ds.X)
        assert np.all((p >= 0.0) & (p <= 1.0))
