"""Dataset container, splits, weights, CSV and ESRI ASCII round-trips."""

from __future__ import annotations

import numpy as np
import pytest

from snn.dataset import (
    Dataset,
    RasterGrid,
    Standardizer,
    checkerboard_split,
    class_weights,
    cv_subsample,
    dataset_from_rasters,
    load_csv,
    read_esri_ascii,
    save_csv,
    values_to_raster,
    weight_vector,
    write_esri_ascii,
)
from snn.errors import DataError

from conftest import make_dataset


class TestDatasetInvariants:
    def test_rejects_non_binary_targets(self):
        with pytest.raises(DataError):
            Dataset(feature_names=("a",), X=np.zeros((3, 1)),
                    y=np.array([0.0, 0.5, 1.0]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DataError):
            Dataset(feature_names=("a", "b"), X=np.zeros((3, 1)),
                    y=np.zeros(3))

    def test_rejects_non_finite_features(self):
        X = np.zeros((3, 1))
        X[1, 0] = np.nan
        with pytest.raises(DataError):
            Dataset(feature_names=("a",), X=X, y=np.array([0.0, 1.0, 0.0]))

    def test_standardizer_round_trip(self, small_ds):
        std = Standardizer.fit(small_ds.X, small_ds.feature_names)
        Z = std.transform(small_ds.X)
        assert np.allclose(Z.mean(axis=0), 0.0, atol=1e-12)
        assert np.allclose(Z.std(axis=0), 1.0, atol=1e-12)
        assert np.allclose(std.inverse(Z), small_ds.X, atol=1e-10)


class TestClassWeights:
    def test_balances_total_mass(self, small_ds):
        w_neg, w_pos = class_weights(small_ds)
        w = weight_vector(small_ds.y, w_neg, w_pos)
        assert w[small_ds.y == 1].sum() == pytest.approx(w[small_ds.y == 0].sum())
        assert np.all(w[small_ds.y == 0] == 1.0)

    def test_balanced_classes_unit_weights(self):
        ds = Dataset(feature_names=("a",),
                     X=np.arange(20, dtype=float).reshape(-1, 1),
                     y=np.array([0.0, 1.0] * 10))
        w = weight_vector(ds.y, *class_weights(ds))
        assert np.allclose(w, 1.0)


class TestCheckerboardSplit:
    def test_partition_sizes_and_determinism(self):
        ds = make_dataset(1000, 3, seed=0)
        a = checkerboard_split(ds, train_fraction=0.7, block=16, seed=4)
        b = checkerboard_split(ds, train_fraction=0.7, block=16, seed=4)
        assert np.array_equal(a.partition, b.partition)
        frac = (a.partition == "train").mean()
        assert 0.55 <= frac <= 0.85
        assert set(np.unique(a.partition)) == {"train", "test"}

    def test_blocks_are_contiguous_without_grid(self):
        ds = make_dataset(64, 2, seed=1)
        with pytest.warns(UserWarning, match="realized train fraction"):
            out = checkerboard_split(ds, train_fraction=0.5, block=8, seed=0)
        tags = out.partition
        for start in range(0, 64, 8):
            block = tags[start:start + 8]
            assert len(set(block)) == 1

    @pytest.mark.filterwarnings("ignore:checkerboard split realized")
    def test_grid_positions_tile_spatially(self):
        rng = np.random.default_rng(0)
        n = 20 * 20
        pos = np.array([(r, c) for r in range(20) for c in range(20)])
        ds = Dataset(
            feature_names=("a",),
            X=rng.normal(size=(n, 1)),
            y=(rng.random(n) < 0.5).astype(float),
            grid_pos=pos,
        )
        out = checkerboard_split(ds, train_fraction=0.5, block=5, seed=0)
        tag_of = {}
        for i in range(n):
            tile = (pos[i, 0] // 5, pos[i, 1] // 5)
            tag_of.setdefault(tile, out.partition[i])
            assert out.partition[i] == tag_of[tile]


class TestCvSubsample:
    def test_halves_each_partition_deterministically(self, split_ds):
        tr1, te1 = cv_subsample(split_ds, trial=3, seed=9)
        tr2, te2 = cv_subsample(split_ds, trial=3, seed=9)
        assert np.array_equal(tr1, tr2) and np.array_equal(te1, te2)
        assert set(tr1) <= set(split_ds.train_indices())
        assert set(te1) <= set(split_ds.test_indices())
        assert tr1.size == split_ds.train_indices().size // 2
        assert te1.size == split_ds.test_indices().size // 2

    def test_different_trials_differ(self, split_ds):
        tr1, _ = cv_subsample(split_ds, trial=0, seed=9)
        tr2, _ = cv_subsample(split_ds, trial=1, seed=9)
        assert not np.array_equal(tr1, tr2)


class TestCsvRoundTrip:
    @pytest.mark.filterwarnings("ignore:checkerboard split realized")
    def test_values_and_partition_survive(self, tmp_path):
        ds = checkerboard_split(make_dataset(60, 3, seed=5), block=8)
        path = tmp_path / "d.csv"
        save_csv(ds, path, include_partition=True)
        back = load_csv(path)
        assert back.feature_names == ds.feature_names
        assert np.array_equal(back.X, ds.X)
        assert np.array_equal(back.y, ds.y)
        assert np.array_equal(back.partition, ds.partition)

    def test_grid_positions_survive(self, tmp_path):
        rng = np.random.default_rng(2)
        pos = np.array([[0, 0], [0, 1], [1, 0], [1, 1]])
        ds = Dataset(feature_names=("a",), X=rng.normal(size=(4, 1)),
                     y=np.array([0.0, 1.0, 0.0, 1.0]), grid_pos=pos)
        path = tmp_path / "d.csv"
        save_csv(ds, path)
        back = load_csv(path)
        assert np.array_equal(back.grid_pos, pos)

    def test_bad_partition_tag_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,target,partition\n1.0,0,train\n2.0,1,holdout\n")
        with pytest.raises(DataError, match="partition"):
            load_csv(path)

    def test_bad_target_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,target\n1.0,2\n")
        with pytest.raises(DataError):
            load_csv(path)


class TestEsriAscii:
    def test_round_trip_with_nodata(self, tmp_path):
        vals = np.array([[1.0, 2.0], [-9999.0, 4.5]])
        grid = RasterGrid(vals, xllcorner=10.0, yllcorner=20.0,
                          cellsize=30.0, nodata=-9999.0)
        path = tmp_path / "g.asc"
        write_esri_ascii(grid, path)
        back = read_esri_ascii(path)
        assert np.array_equal(back.values, vals)
        assert back.cellsize == 30.0
        assert back.xllcorner == 10.0
        assert not back.mask()[1, 0]

    def test_rasters_to_dataset_and_back(self):
        rng = np.random.default_rng(0)
        a = RasterGrid(rng.normal(size=(5, 6)), cellsize=10.0)
        t_vals = (rng.random((5, 6)) < 0.5).astype(float)
        t_vals[0, 0] = a.nodata
        a_vals = a.values.copy()
        a_vals[2, 3] = a.nodata
        a = RasterGrid(a_vals, cellsize=10.0)
        target = RasterGrid(t_vals, cellsize=10.0)
        ds = dataset_from_rasters({"a": a}, target)
        # two cells lost to NODATA in either grid
        assert ds.n_samples == 28
        back = values_to_raster(a, ds.grid_pos, np.arange(28, dtype=float))
        mask = back.mask()
        assert mask.sum() == 28
        assert not mask[0, 0] and not mask[2, 3]

    def test_misaligned_rasters_rejected(self):
        a = RasterGrid(np.zeros((4, 4)), cellsize=10.0)
        t = RasterGrid(np.zeros((5, 4)), cellsize=10.0)
        with pytest.raises(DataError):
            dataset_from_rasters({"a": a}, t)
