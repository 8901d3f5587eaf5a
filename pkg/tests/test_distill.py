"""Round-robin distillation and the superposed assembly of final subnets."""

from __future__ import annotations

import numpy as np
import pytest

from snn.dataset import checkerboard_split
from snn.distill import (
    DistillConfig,
    fractional_distill,
    parallel_distill,
    superpose,
)
from snn.errors import DataError, NumericalError
from snn.metrics import auroc
from snn.monomials import composite_design, parse_label

from conftest import make_dataset


def _setup(seed: int = 0):
    ds = checkerboard_split(make_dataset(500, 2, seed=seed, separation=2.0,
                                         names=("a", "b")),
                            train_fraction=0.7, block=16, seed=0)
    features = [parse_label(lbl, ds.feature_names) for lbl in ("a", "b", "a*b")]
    design = composite_design(features, ds)
    # a smooth stand-in for teacher soft targets
    ts0 = np.tanh(design.chi[:, 0]) + 0.3 * np.tanh(design.chi[:, 2]) + 0.5
    return ds, features, design, ts0


class TestFractionalDistill:
    def test_offsets_decompose_trace_improves(self):
        ds, features, design, ts0 = _setup()
        out = fractional_distill(ts0, features, ds,
                                 DistillConfig(v=3, epochs=12, max_rounds=6))
        assert out.offsets.shape == (ds.n_samples, len(features))
        assert out.labels == design.labels
        assert out.rounds >= 1
        assert out.stop_reason in ("patience", "max_rounds", "converged")
        # accepted rounds never lower the train AUROC of the running sum;
        # the guarantee holds at round boundaries (the last row per round)
        last_per_round: dict[int, float] = {}
        for row in out.trace:
            last_per_round[row.round] = row.auroc
        ends = [last_per_round[r] for r in sorted(last_per_round)]
        assert all(b >= a - 1e-12 for a, b in zip(ends, ends[1:]))

    def test_residual_is_targets_minus_total_offsets(self):
        ds, features, design, ts0 = _setup()
        out = fractional_distill(ts0, features, ds,
                                 DistillConfig(v=3, epochs=12, max_rounds=4))
        assert np.allclose(out.residual, ts0 - out.offsets.sum(axis=1),
                           atol=1e-12)

    def test_deterministic(self):
        ds, features, design, ts0 = _setup()
        cfg = DistillConfig(v=3, epochs=10, max_rounds=3)
        a = fractional_distill(ts0, features, ds, cfg)
        b = fractional_distill(ts0, features, ds, cfg)
        assert np.array_equal(a.offsets, b.offsets)

    def test_rejects_bad_targets(self):
        ds, features, design, ts0 = _setup()
        with pytest.raises(DataError):
            fractional_distill(ts0[:-1], features, ds)
        bad = ts0.copy()
        bad[0] = np.inf
        with pytest.raises(NumericalError):
            fractional_distill(bad, features, ds)


class TestParallelDistillAndSuperpose:
    def test_scheduling_independent_and_additive(self):
        ds, features, design, ts0 = _setup()
        frac = fractional_distill(ts0, features, ds,
                                  DistillConfig(v=3, epochs=12, max_rounds=4))
        serial = parallel_distill(frac.offsets, features, ds,
                                  DistillConfig(final_v=4, final_epochs=30),
                                  threads=1)
        para = parallel_distill(frac.offsets, features, ds,
                                DistillConfig(final_v=4, final_epochs=30),
                                threads=2)
        for s, p in zip(serial, para):
            assert s.label == p.label
            assert np.array_equal(s.params.w, p.params.w)

        model = superpose(serial, design, ds.feature_names)
        total, contrib = model.evaluate(ds.X)
        # superposition identity: left-fold sum of contributions, exactly
        acc = np.zeros(ds.n_samples)
        for j in range(contrib.shape[1]):
            acc = acc + contrib[:, j]
        assert np.array_equal(total, acc)

    def test_student_tracks_teacher_stand_in(self):
        ds, features, design, ts0 = _setup()
        frac = fractional_distill(ts0, features, ds,
                                  DistillConfig(v=4, epochs=20, max_rounds=8))
        fits = parallel_distill(frac.offsets, features, ds,
                                DistillConfig(final_v=6, final_epochs=60))
        model = superpose(fits, design, ds.feature_names)
        pred, _ = model.evaluate(ds.X)
        tr = ds.train_indices()
        rmse = float(np.sqrt(np.mean((pred[tr] - ts0[tr]) ** 2)))
        assert rmse < 0.15
        assert auroc(pred, ds.y) > 0.85
