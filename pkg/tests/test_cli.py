"""Command-line interface: exit codes, config-file merging, determinism,
and the train/eval round trip."""

from __future__ import annotations

import numpy as np
import pytest

from snn.cli import main
from snn.dataset import load_csv, save_csv
from snn.synthetic import ToySpec, gen_toy

from conftest import make_dataset


@pytest.fixture
def toy_csv(tmp_path):
    ds = gen_toy(ToySpec(n_samples=200, seed=3))
    path = tmp_path / "toy.csv"
    save_csv(ds, path)
    return path


@pytest.fixture
def small_csv(tmp_path):
    ds = make_dataset(n=240, n_features=3, seed=5, separation=2.5)
    path = tmp_path / "small.csv"
    save_csv(ds, path)
    return path


class TestExitCodes:
    def test_no_command_is_usage(self, capsys):
        assert main([]) == 1

    def test_unknown_command_is_usage(self):
        assert main(["frobnicate"]) == 1

    def test_missing_required_option_is_usage(self, capsys):
        assert main(["expand"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        capsys.readouterr()

    def test_malformed_data_is_a_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("x1,x2,target\n1.0,oops,1\n")
        code = main(["rank", "--data", str(bad), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "data error:" in capsys.readouterr().err

    def test_missing_file_is_a_data_error(self, tmp_path, capsys):
        code = main(["eval", "--data", str(tmp_path / "nope.csv"),
                     "--model", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o")])
        assert code == 2


class TestExpand:
    def test_golden_pair_listing(self, tmp_path, capsys):
        out = tmp_path / "exp"
        assert main(["expand", "--n-features", "3", "--level", "2",
                     "--out", str(out)]) == 0
        listing = (out / "composites.csv").read_text()
        lines = listing.strip().splitlines()
        assert lines[0] == "rank,label,level"
        labels = [ln.split(",")[1] for ln in lines[1:]]
        # squares reduce to their base feature, so level 2 is bases + pairs
        assert labels == ["x1", "x2", "x3", "x1*x2", "x1*x3", "x2*x3"]

    def test_level_three_count(self, tmp_path):
        out = tmp_path / "exp"
        assert main(["expand", "--n-features", "3", "--level", "3",
                     "--out", str(out)]) == 0
        lines = (out / "composites.csv").read_text().strip().splitlines()
        assert len(lines) - 1 == 13

    def test_names_override_count(self, tmp_path):
        out = tmp_path / "exp"
        assert main(["expand", "--names", "Slope,MAP", "--level", "2",
                     "--out", str(out)]) == 0
        listing = (out / "composites.csv").read_text()
        assert "Slope*MAP" in listing

    def test_multilinear_counts(self, tmp_path):
        out = tmp_path / "exp"
        assert main(["expand", "--n-features", "4", "--level", "4",
                     "--multilinear", "--out", str(out)]) == 0
        lines = (out / "composites.csv").read_text().strip().splitlines()
        assert len(lines) - 1 == 15  # 2^4 - 1 squarefree products


class TestConfigFile:
    def test_file_overrides_default_and_flag_overrides_file(self, tmp_path,
                                                            small_csv):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment line\nlevel = 1\nn_groups = 12\nseed = 5\n")
        out = tmp_path / "r1"
        assert main(["rank", "--data", str(small_csv), "--config", str(cfg),
                     "--seed", "0", "--rank-epochs", "8", "--group-size", "3",
                     "--out", str(out)]) == 0
        echoed = (out / "config_used.txt").read_text()
        assert "level=1" in echoed        # from the file
        assert "n_groups=12" in echoed    # from the file
        assert "seed=0" in echoed         # flag beats file
        assert "rank_epochs=8" in echoed  # flag beats default

    def test_unknown_key_is_rejected(self, tmp_path, small_csv, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("no_such_option = 3\n")
        code = main(["rank", "--data", str(small_csv), "--config", str(cfg),
                     "--out", str(tmp_path / "r")])
        assert code == 1
        assert "no_such_option" in capsys.readouterr().err

    def test_malformed_line_is_rejected_with_line_number(self, tmp_path,
                                                         small_csv, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("level = 2\nthis line has no equals\n")
        code = main(["rank", "--data", str(small_csv), "--config", str(cfg),
                     "--out", str(tmp_path / "r")])
        assert code == 1
        assert "2" in capsys.readouterr().err


class TestTrainEvalChain:
    def test_named_features_train_then_eval(self, tmp_path, small_csv):
        train_out = tmp_path / "fit"
        assert main(["train", "--data", str(small_csv),
                     "--features", "f1,f2,f1*f2",
                     "--seed", "0", "--out", str(train_out)]) == 0
        model = train_out / "model.json"
        assert model.exists()
        summary = (train_out / "summary.csv").read_text()
        assert "train_auroc" in summary

        eval_out = tmp_path / "scores"
        assert main(["eval", "--data", str(small_csv),
                     "--model", str(model), "--out", str(eval_out)]) == 0
        for name in ("scores.csv", "metrics.csv", "roc.csv",
                     "success_rate.csv", "threshold.csv"):
            assert (eval_out / name).exists(), name
        scores = (eval_out / "scores.csv").read_text().strip().splitlines()
        assert scores[0] == "index,score,target,partition"
        assert len(scores) == 241

    def test_eval_auroc_matches_summary(self, tmp_path, small_csv):
        train_out = tmp_path / "fit"
        main(["train", "--data", str(small_csv), "--features", "f1,f2",
              "--seed", "0", "--out", str(train_out)])
        eval_out = tmp_path / "scores"
        main(["eval", "--data", str(small_csv),
              "--model", str(train_out / "model.json"),
              "--out", str(eval_out)])
        def row_value(path, key, col):
            for line in path.read_text().strip().splitlines()[1:]:
                parts = line.split(",")
                if parts[0] == key:
                    return float(parts[col])
            raise AssertionError(f"{key} not found in {path}")
        trained = row_value(train_out / "summary.csv", "train_auroc", 1)
        scored = row_value(eval_out / "metrics.csv", "train", 2)
        assert scored == pytest.approx(trained, abs=1e-12)


class TestDeterminism:
    def test_same_invocation_same_bytes(self, tmp_path, small_csv):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["train", "--data", str(small_csv),
                         "--features", "f1,f2", "--seed", "1",
                         "--out", str(out)]) == 0
            outs.append(out)
        for fname in ("model.json", "summary.csv", "trace.csv"):
            a = (outs[0] / fname).read_bytes()
            b = (outs[1] / fname).read_bytes()
            assert a == b, fname

    def test_demo_data_round_trips_through_load(self, tmp_path):
        out = tmp_path / "demo"
        assert main(["demo-data", "--nrows", "24", "--ncols", "24",
                     "--block", "6", "--seed", "2", "--out", str(out)]) == 0
        ds = load_csv(out / "dataset.csv")
        assert ds.X.shape == (24 * 24, 5)
        assert (out / "slope.asc").exists()
        assert (out / "target.asc").exists()
        assert {"train", "test"} == set(np.unique(ds.partition))
