"""Command-line entry point: the pipeline as reproducible subcommands.

Every subcommand reads files, writes files into ``--out``, and echoes the
effective configuration it ran with (flags override config-file entries,
which override built-in defaults), so any output directory documents how
to recreate itself. Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from ._svg import Series, bar_chart, line_chart
from ._util import fmt_float
from .baselines import (
    FiParams,
    failure_index,
    load_logr,
    load_lr,
    logr_score,
    logr_train,
    lr_score,
    lr_train,
    MlpConfig,
    mlp_baseline_train,
    mlp_score,
    save_logr,
    save_lr,
    wetness,
)
from .dataset import (
    Dataset,
    RasterGrid,
    checkerboard_split,
    load_csv,
    read_esri_ascii,
    save_csv,
    write_esri_ascii,
)
from .distill import DistillConfig
from .errors import DataError, NumericalError, UsageError
from .explain import (
    contribution_curve,
    delta_sbar_map,
    normalized_deltas,
)
from .metrics import auroc, confusion, optimal_threshold, roc_curve, success_rate_curve
from .monomials import expand, parse_label
from .pipeline import PipelineConfig, train_snn
from .rbf import load_model, save_model
from .synthetic import gen_raster_demo, gen_toy, toy_truth_table
from .teacher import TeacherConfig
from .tournament import TournamentConfig

__all__ = ["main", "build_parser"]


# ---------------------------------------------------------------------------
# option plumbing: defaults < config file < flags
# ---------------------------------------------------------------------------

# Registry of (subcommand, dest) -> (coercion, default). Options are added
# to argparse with default=None so a merge step can tell "flag given" from
# "flag omitted".
_REGISTRY: dict[tuple[str, str], tuple[Callable, object]] = {}


def _opt(sub: argparse.ArgumentParser, cmd: str, flag: str, *, type_: Callable,
         default: object, help_: str, choices: Sequence | None = None) -> None:
    dest = flag.lstrip("-").replace("-", "_")
    kwargs: dict = {"type": type_, "default": None, "help": help_, "dest": dest}
    if choices is not None:
        kwargs["choices"] = choices
    sub.add_argument(flag, **kwargs)
    _REGISTRY[(cmd, dest)] = (type_, default)


def _flag(sub: argparse.ArgumentParser, cmd: str, flag: str, help_: str) -> None:
    dest = flag.lstrip("-").replace("-", "_")
    sub.add_argument(flag, action="store_const", const=True, default=None,
                     dest=dest, help=help_)
    _REGISTRY[(cmd, dest)] = (_parse_bool, False)


def _parse_bool(text: str | bool) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"cannot parse boolean value {text!r}")


def _read_config_file(path: str) -> dict[str, str]:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {p}")
    out: dict[str, str] = {}
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(
                f"{p}: line {lineno}: expected key=value, got {line!r}"
            )
        key, _, value = line.partition("=")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _merge_config(cmd: str, args: argparse.Namespace) -> dict:
    """Resolve each registered option: default, then config file, then flag."""
    file_cfg = _read_config_file(args.config) if getattr(args, "config", None) else {}
    merged: dict = {}
    for (c, dest), (type_, default) in _REGISTRY.items():
        if c != cmd:
            continue
        value = default
        if dest in file_cfg:
            try:
                value = type_(file_cfg[dest])
            except (TypeError, ValueError) as exc:
                raise UsageError(
                    f"config key {dest!r}: cannot parse {file_cfg[dest]!r}"
                ) from exc
        flag_val = getattr(args, dest, None)
        if flag_val is not None:
            value = flag_val
        merged[dest] = value
    unknown = set(file_cfg) - {d for (c, d) in _REGISTRY if c == cmd} - {"config"}
    if unknown:
        raise UsageError(
            f"config file has keys not used by {cmd!r}: {sorted(unknown)}"
        )
    return merged


def _echo_config(out_dir: Path, cmd: str, cfg: Mapping) -> None:
    lines = [f"command={cmd}"]
    for key in sorted(cfg):
        val = cfg[key]
        if isinstance(val, bool):
            text = "true" if val else "false"
        elif isinstance(val, float):
            text = fmt_float(val)
        elif val is None:
            text = ""
        else:
            text = str(val)
        lines.append(f"{key}={text}")
    (out_dir / "config_used.txt").write_text("\n".join(lines) + "\n")


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cell(v: object) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v))
    return str(v)


def _write_csv(path: Path, header: Sequence[str],
               rows: Sequence[Sequence[object]]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _load_dataset(cfg: Mapping) -> Dataset:
    ds = load_csv(cfg["data"])
    if cfg.get("split") == "checkerboard":
        ds = checkerboard_split(
            ds,
            train_fraction=cfg["train_fraction"],
            block=cfg["block"],
            seed=cfg["seed"],
        )
    return ds


def _add_split_opts(sub: argparse.ArgumentParser, cmd: str) -> None:
    _opt(sub, cmd, "--split", type_=str, default="none",
         choices=("none", "checkerboard"),
         help_="re-partition the data (default: use the file's partition column)")
    _opt(sub, cmd, "--train-fraction", type_=float, default=0.7,
         help_="train fraction for --split checkerboard")
    _opt(sub, cmd, "--block", type_=int, default=16,
         help_="checkerboard tile size in cells/rows")


def _metrics_rows(scores: np.ndarray, ds: Dataset) -> list[list[object]]:
    rows: list[list[object]] = []
    for part in ("train", "test"):
        idx = np.flatnonzero(ds.partition == part)
        if idx.size and np.unique(ds.y[idx]).size == 2:
            rows.append([part, idx.size, auroc(scores[idx], ds.y[idx])])
    if np.unique(ds.y).size == 2:
        rows.append(["all", ds.n_samples, auroc(scores, ds.y)])
    return rows


def _write_scores(out: Path, scores: np.ndarray, ds: Dataset) -> None:
    _write_csv(
        out / "scores.csv",
        ["index", "score", "target", "partition"],
        [[i, scores[i], int(ds.y[i]), str(ds.partition[i])]
         for i in range(ds.n_samples)],
    )
    _write_csv(out / "metrics.csv", ["partition", "n", "auroc"],
               _metrics_rows(scores, ds))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_expand(cfg: Mapping) -> int:
    out = _out_dir(cfg["out"])
    names = cfg["names"].split(",") if cfg["names"] else None
    n = len(names) if names else cfg["n_features"]
    if n is None:
        raise UsageError("give --n-features or --names")
    ms = expand(n, cfg["level"], multilinear=cfg["multilinear"])
    _write_csv(
        out / "composites.csv",
        ["rank", "label", "level"],
        [[i + 1, m.label(names), m.level] for i, m in enumerate(ms)],
    )
    _echo_config(out, "expand", cfg)
    print(f"wrote {len(ms)} composite features to {out / 'composites.csv'}")
    return 0


def _tournament_config(cfg: Mapping) -> TournamentConfig:
    return TournamentConfig(
        group_size=cfg["group_size"],
        n_groups=cfg["n_groups"],
        net_width=cfg["net_width"],
        epochs=cfg["rank_epochs"],
        forward_tol=cfg["forward_tol"],
        val_fraction=cfg["val_fraction"],
        seed=cfg["seed"],
    )


def _add_tournament_opts(sub: argparse.ArgumentParser, cmd: str) -> None:
    _opt(sub, cmd, "--group-size", type_=int, default=8,
         help_="features per tournament group")
    _opt(sub, cmd, "--n-groups", type_=int, default=2000,
         help_="number of tournament groups")
    _opt(sub, cmd, "--net-width", type_=int, default=16,
         help_="total Gaussian units of one group model")
    _opt(sub, cmd, "--rank-epochs", type_=int, default=50,
         help_="fit epochs inside the tournament")
    _opt(sub, cmd, "--forward-tol", type_=float, default=0.002,
         help_="validation AUROC gain required to keep a feature")
    _opt(sub, cmd, "--val-fraction", type_=float, default=0.25,
         help_="holdout fraction of the train partition for selection")


def _write_ranking(out: Path, ranking) -> None:
    _write_csv(
        out / "ranking.csv",
        ["rank", "label", "level", "points"],
        [[i + 1, e.label, e.level, e.points]
         for i, e in enumerate(ranking.entries)],
    )


def _write_selection(out: Path, selection) -> None:
    _write_csv(
        out / "selection.csv",
        ["order", "label", "val_auroc"],
        [[i + 1, lab, selection.val_auroc]
         for i, lab in enumerate(selection.labels)],
    )


def cmd_rank(cfg: Mapping) -> int:
    out = _out_dir(cfg["out"])
    ds = _load_dataset(cfg)
    candidates = expand(ds.n_features, cfg["level"],
                        multilinear=cfg["multilinear"])
    from .tournament import forward_select, run_tournament

    tcfg = _tournament_config(cfg)
    ranking = run_tournament(candidates, ds, tcfg, threads=cfg["threads"])
    selection = forward_select(ranking, ds, tcfg, threads=cfg["threads"])
    _write_ranking(out, ranking)
    _write_selection(out, selection)
    _echo_config(out, "rank", cfg)
    print(f"ranked {len(candidates)} candidates over {ranking.completed_groups} "
          f"groups; selected: {', '.join(selection.labels)}")
    return 0


def cmd_train(cfg: Mapping) -> int:
    out = _out_dir(cfg["out"])
    ds = _load_dataset(cfg)
    pcfg = PipelineConfig(
        seed=cfg["seed"],
        level=cfg["level"],
        multilinear=cfg["multilinear"],
        convention=cfg["convention"],
        tournament=_tournament_config(cfg),
        teacher=TeacherConfig(
            stages=cfg["teacher_stages"],
            hidden=cfg["teacher_hidden"],
            epochs=cfg["teacher_epochs"],
        ),
        distill=DistillConfig(
            v=cfg["distill_v"],
            epochs=cfg["distill_epochs"],
            patience=cfg["patience"],
            max_rounds=cfg["max_rounds"],
            final_v=cfg["final_v"],
            final_epochs=cfg["final_epochs"],
        ),
        threads=cfg["threads"],
    )
    features = None
    if cfg["features"]:
        features = [parse_label(lab.strip(), ds.feature_names)
                    for lab in cfg["features"].split(",")]
    result = train_snn(ds, pcfg, features=features)
    save_model(result.model, out / "model.json")
    if result.ranking is not None:
        _write_ranking(out, result.ranking)
        _write_selection(out, result.selection)
    _write_csv(
        out / "trace.csv",
        ["round", "label", "rmse", "auroc"],
        [[t.round, t.label, t.rmse, t.auroc] for t in result.fractional.trace],
    )
    summary = [
        ["selected", " ".join(result.selection.labels)],
        ["train_auroc", result.train_auroc],
        ["test_auroc", "" if result.test_auroc is None else result.test_auroc],
        ["teacher_train_auroc", result.teacher.report["train_auroc"]],
        ["threshold", result.threshold],
        ["distill_rounds", result.fractional.rounds],
        ["distill_stop", result.fractional.stop_reason],
        ["student_rmse_vs_teacher", result.student_rmse_vs_teacher],
    ]
    _write_csv(out / "summary.csv", ["key", "value"], summary)
    _echo_config(out, "train", cfg)
    test_txt = ("" if result.test_auroc is None
                else f", test AUROC {result.test_auroc:.4f}")
    print(f"model written to {out / 'model.json'}; "
          f"train AUROC {result.train_auroc:.4f}{test_txt}")
    return 0


def cmd_eval(cfg: Mapping) -> int:
    out = _out_dir(cfg["out"])
    ds = _load_dataset(cfg)
    model = load_model(cfg["model"])
    scores = model.predict(ds.X)
    _write_scores(out, scores, ds)

    te = np.flatnonzero(ds.partition == "test")
    eval_idx = te if te.size and np.unique(ds.y[te]).size == 2 else np.arange(ds.n_samples)
    curve = roc_curve(scores[eval_idx], ds.y[eval_idx])
    _write_csv(out / "roc.csv", ["threshold", "fpr", "tpr"],
               list(zip(curve.thresholds, curve.fpr, curve.tpr)))
    sr = success_rate_curve(scores[eval_idx], ds.y[eval_idx])
    _write_csv(out / "success_rate.csv", ["flagged_fraction", "captured_fraction"],
               list(zip(sr.flagged, sr.captured)))
    t, t_fpr, t_tpr = optimal_threshold(curve)
    cm = confusion(scores[eval_idx], ds.y[eval_idx], t)
    _write_csv(
        out / "threshold.csv",
        ["key", "value"],
        [["threshold", t], ["fpr", t_fpr], ["tpr", t_tpr],
         ["tp", cm.tp], ["fn", cm.fn], ["fp", cm.fp], ["tn", cm.tn],
         ["accuracy", cm.accuracy], ["pod", cm.pod], ["pofd", cm.pofd]],
    )
    line_chart(
        out / "roc.svg",
        [Series("model", curve.fpr, curve.tpr),
         Series("chance", np.array([0.0, 1.0]), np.array([0.0, 1.0]),
                color="#999999", dash="6,5")],
        title="ROC", xlabel="false positive rate", ylabel="true positive rate",
    )
    line_chart(
        out / "success.svg",
        [Series("model", sr.flagged, sr.captured),
         Series("chance", np.array([0.0, 1.0]), np.array([0.0, 1.0]),
                color="#999999", dash="6,5")],
        title="Success rate", xlabel="fraction flagged",
        ylabel="fraction of positives captured",
    )
    _echo_config(out, "eval", cfg)
    for part, n, a in _metrics_rows(scores, ds):
        print(f"AUROC[{part}] = {a:.4f} (n={n})")
    return 0


def _safe_name(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in label)


def cmd_explain(cfg: Mapping) -> int:
    out = _out_dir(cfg["out"])
    ds = _load_dataset(cfg)
    model = load_model(cfg["model"])
    threshold = cfg["threshold"]
    if threshold is None:
        threshold = model.metadata.get("threshold")
    if threshold is None:
        raise UsageError(
            "no --threshold given and the model metadata has none"
        )

    curves_dir = out / "curves"
    curves_dir.mkdir(exist_ok=True)
    for label in model.labels:
        cc = contribution_curve(model, label, ds, n_samples=cfg["curve_samples"])
        stem = curves_dir / _safe_name(label)
        _write_csv(stem.with_suffix(".csv"), ["z", "s", "lr"],
                   list(zip(cc.z, cc.s, cc.lr)))
        refs = []
        if cc.s_at_lr_one is not None:
            refs.append((cc.s_at_lr_one, "S at LR=1"))
        line_chart(
            stem.with_suffix(".svg"),
            [Series(f"S({label})", cc.z, cc.s),
             Series("LR", cc.z, cc.lr, right_axis=True, dash="4,4")],
            title=f"Contribution of {label}", xlabel=label,
            ylabel="contribution", ylabel_right="likelihood ratio",
            h_refs=refs,
        )

    if ds.grid_pos is not None:
        geometry = (read_esri_ascii(cfg["geometry"])
                    if cfg["geometry"] else None)
        dmap = delta_sbar_map(
            model, ds, window_cells=cfg["window_cells"],
            ld_source=cfg["ld_source"], threshold=threshold,
            geometry=geometry,
        )
        header = ["window_row", "window_col", "n_ld", "n_nld", "dominant"]
        header += [f"delta_{_safe_name(l)}" for l in model.labels]
        _write_csv(
            out / "windows.csv", header,
            [[r.window[0], r.window[1], r.n_ld, r.n_nld, r.dominant, *r.delta]
             for r in dmap.reports],
        )
        write_esri_ascii(dmap.dominant_raster, out / "dominant.asc")
        _write_csv(out / "legend.csv", ["index", "label"], list(dmap.legend))

    nd = normalized_deltas(model, ds, threshold=threshold)
    _write_csv(out / "normalized_deltas.csv",
               ["label", "delta", "normalized"], list(nd))
    bar_chart(
        out / "normalized_deltas.svg",
        [row[0] for row in nd],
        [[row[2] for row in nd]],
        ["delta / threshold"],
        title="Normalized contribution differences",
        ylabel="normalized delta",
    )
    if cfg["logr_model"]:
        lgm = load_logr(cfg["logr_model"])
        if cfg["logr_threshold"] is None:
            raise UsageError("--logr-model needs --logr-threshold")
        ndl = normalized_deltas(lgm, ds, threshold=cfg["logr_threshold"])
        _write_csv(out / "normalized_deltas_logr.csv",
                   ["label", "delta", "normalized"], list(ndl))
    _echo_config(out, "explain", cfg)
    print(f"explanation products written to {out}")
    return 0


def cmd_baseline(cfg: Mapping) -> int:
    which = cfg["which"]
    out = _out_dir(cfg["out"])
    if which == "fi":
        slope = read_esri_ascii(cfg["slope"])
        area = read_esri_ascii(cfg["area"])
        if cfg["precip"]:
            q = read_esri_ascii(cfg["precip"])
        else:
            q = RasterGrid(np.full_like(slope.values, cfg["q"]),
                           slope.xllcorner, slope.yllcorner,
                           slope.cellsize, slope.nodata)
        params = FiParams(
            s0=cfg["s0"], t_trans=cfg["t_trans"], rho_w=cfg["rho_w"],
            rho_s=cfg["rho_s"],
            b=cfg["b"] if cfg["b"] is not None else slope.cellsize,
        )
        w = wetness(q, area, slope, params)
        fi = failure_index(slope, w, params)
        write_esri_ascii(w, out / "wetness.asc")
        write_esri_ascii(fi, out / "fi.asc")
        if cfg["data"]:
            ds = _load_dataset(cfg)
            if ds.grid_pos is None:
                raise DataError("dataset has no row/col columns; cannot "
                                "sample the FI raster")
            scores = fi.values[ds.grid_pos[:, 0], ds.grid_pos[:, 1]]
            _write_scores(out, scores, ds)
        _echo_config(out, "baseline", cfg)
        print(f"failure-index rasters written to {out}")
        return 0

    ds = _load_dataset(cfg)
    if which == "lr":
        model = lr_train(ds, bins=cfg["bins"])
        save_lr(model, out / "lr_model.json")
        scores = lr_score(model, ds.X)
    elif which == "logr":
        model = logr_train(ds)
        save_logr(model, out / "logr_model.json")
        scores = logr_score(model, ds.X)
    elif which == "mlp":
        model = mlp_baseline_train(ds, MlpConfig(seed=cfg["seed"]))
        scores = mlp_score(model, ds.X)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown baseline {which!r}")
    _write_scores(out, scores, ds)
    _echo_config(out, "baseline", cfg)
    for part, n, a in _metrics_rows(scores, ds):
        print(f"{which} AUROC[{part}] = {a:.4f} (n={n})")
    return 0


def cmd_toy(cfg: Mapping) -> int:
    out = _out_dir(cfg["out"])
    ds = gen_toy(n_samples=cfg["n_samples"], noise_sigma=cfg["noise_sigma"],
                 seed=cfg["data_seed"])
    ds = checkerboard_split(ds, train_fraction=0.7, block=16,
                            seed=cfg["data_seed"])
    pcfg = PipelineConfig(
        seed=cfg["seed"], level=4, multilinear=True,
        tournament=TournamentConfig(n_groups=cfg["n_groups"]),
        threads=cfg["threads"],
    )
    result = train_snn(ds, pcfg)
    model = result.model
    save_model(model, out / "model.json")
    _write_ranking(out, result.ranking)
    _write_selection(out, result.selection)

    # step differences of every fitted subnet over its 0/1 composite
    B, y = toy_truth_table()
    contrib = model.contributions(B)
    steps = []
    from .monomials import evaluate_matrix

    for j, sub in enumerate(model.subnets):
        vals = evaluate_matrix([sub.monomial], B)[:, 0]
        c0 = float(contrib[vals == 0.0, j][0])
        c1 = float(contrib[vals == 1.0, j][0])
        steps.append((sub.label, c1 - c0))
    _write_csv(out / "steps.csv", ["label", "step"], steps)

    pred = model.predict(B)
    _write_csv(
        out / "corners.csv",
        ["x1", "x2", "x3", "x4", "target", "output", "thresholded"],
        [[int(B[i, 0]), int(B[i, 1]), int(B[i, 2]), int(B[i, 3]),
          int(y[i]), pred[i], int(pred[i] >= 0.5)] for i in range(16)],
    )
    corner_idx = np.arange(16, dtype=float)
    line_chart(
        out / "corners.svg",
        [Series("target", corner_idx, y.astype(float), markers=True),
         Series("model output", corner_idx, pred, markers=True, dash="5,4")],
        title="Truth table vs model output", xlabel="corner index",
        ylabel="output", h_refs=[(0.5, "decision threshold")],
    )
    sample_scores = model.predict(ds.X)
    order = np.argsort(ds.y, kind="stable")
    line_chart(
        out / "samples.svg",
        [Series("target", np.arange(ds.n_samples, dtype=float),
                ds.y[order].astype(float)),
         Series("model output", np.arange(ds.n_samples, dtype=float),
                sample_scores[order], dash="2,3")],
        title="Samples sorted by class vs model output",
        xlabel="sample (sorted by class)", ylabel="output",
        h_refs=[(0.5, "decision threshold")],
    )
    curves_dir = out / "curves"
    curves_dir.mkdir(exist_ok=True)
    for label in model.labels:
        cc = contribution_curve(model, label, ds)
        stem = curves_dir / _safe_name(label)
        _write_csv(stem.with_suffix(".csv"), ["z", "s", "lr"],
                   list(zip(cc.z, cc.s, cc.lr)))

    # the report: what the experiment claims, each line pass/fail
    entries = {e.label: i for i, e in enumerate(result.ranking.entries)}
    quad_first = result.ranking.entries[0].label == "x1*x2*x3*x4"
    pairs_top3 = all(entries.get(p, 99) < 3 for p in ("x1*x2", "x3*x4"))
    step_of = dict(steps)
    expected = {"x1*x2": 1.0, "x3*x4": 1.0, "x1*x2*x3*x4": -2.0}
    steps_ok = all(
        lab in step_of and abs(step_of[lab] - want) <= 0.15
        for lab, want in expected.items()
    )
    hat = (pred >= 0.5).astype(int)
    corners_ok = bool(np.all(hat == y))
    max_err = float(np.max(np.abs(pred - y)))
    noisy_hat = (sample_scores >= 0.5).astype(int)
    noisy_acc = float((noisy_hat == ds.y).mean())
    lines = [
        f"ranking: {', '.join(e.label for e in result.ranking.entries[:5])}, ...",
        f"quad ranked first: {'PASS' if quad_first else 'FAIL'}",
        f"both pairs in top 3: {'PASS' if pairs_top3 else 'FAIL'}",
        "step differences: "
        + ", ".join(f"{lab}={step_of.get(lab, float('nan')):+.3f}"
                    for lab in expected)
        + f" (each within +-0.15 of (1, 1, -2): {'PASS' if steps_ok else 'FAIL'})",
        f"all 16 corners thresholded correctly: "
        f"{'PASS' if corners_ok else 'FAIL'} (max |error| {max_err:.4f})",
        f"thresholded accuracy on the {ds.n_samples} samples: {noisy_acc:.4f}",
    ]
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    _echo_config(out, "toy", cfg)
    print("\n".join(lines))
    return 0


def cmd_demo_data(cfg: Mapping) -> int:
    out = _out_dir(cfg["out"])
    rasters, target, ds = gen_raster_demo(
        nrows=cfg["nrows"], ncols=cfg["ncols"], seed=cfg["seed"],
        cellsize=cfg["cellsize"],
    )
    for name, grid in rasters.items():
        write_esri_ascii(grid, out / f"{name.lower()}.asc")
    write_esri_ascii(target, out / "target.asc")
    ds = checkerboard_split(ds, train_fraction=cfg["train_fraction"],
                            block=cfg["block"], seed=cfg["seed"])
    save_csv(ds, out / "dataset.csv", include_partition=True)
    _echo_config(out, "demo-data", cfg)
    print(f"demo rasters and dataset.csv ({ds.n_samples} cells, "
          f"{int(ds.y.sum())} positives) written to {out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snn",
        description="Interpretable susceptibility modeling by superposed "
                    "Gaussian subnets.",
    )
    subs = parser.add_subparsers(dest="command", metavar="COMMAND")

    def common(sub: argparse.ArgumentParser, cmd: str,
               with_seed: bool = True) -> None:
        sub.add_argument("--config", default=None,
                         help="key=value config file (flags win)")
        _opt(sub, cmd, "--out", type_=str, default=None,
             help_="output directory (required)")
        if with_seed:
            _opt(sub, cmd, "--seed", type_=int, default=0,
                 help_="master seed for every random draw")
        _opt(sub, cmd, "--threads", type_=int, default=None,
             help_="worker processes (default: SNN_THREADS or CPU count)")

    def data_opt(sub: argparse.ArgumentParser, cmd: str,
                 required: bool = True) -> None:
        _opt(sub, cmd, "--data", type_=str, default=None,
             help_="dataset CSV" + ("" if required else " (optional)"))
        _add_split_opts(sub, cmd)

    p = subs.add_parser("expand", help="enumerate composite features")
    common(p, "expand", with_seed=False)
    _opt(p, "expand", "--n-features", type_=int, default=None,
         help_="number of basis features")
    _opt(p, "expand", "--names", type_=str, default="",
         help_="comma-separated basis feature names (overrides --n-features)")
    _opt(p, "expand", "--level", type_=int, default=2,
         help_="maximum composite level")
    _flag(p, "expand", "--multilinear",
          "restrict to squarefree products (for two-valued features)")

    p = subs.add_parser("rank", help="tournament ranking + forward selection")
    common(p, "rank")
    data_opt(p, "rank")
    _opt(p, "rank", "--level", type_=int, default=2, help_="max composite level")
    _flag(p, "rank", "--multilinear", "restrict to squarefree products")
    _add_tournament_opts(p, "rank")

    p = subs.add_parser("train", help="train a model end to end")
    common(p, "train")
    data_opt(p, "train")
    _opt(p, "train", "--level", type_=int, default=2, help_="max composite level")
    _flag(p, "train", "--multilinear", "restrict to squarefree products")
    _opt(p, "train", "--convention", type_=str,
         default="raw-product-then-standardize",
         choices=("raw-product-then-standardize", "standardize-then-product"),
         help_="composite construction convention")
    _opt(p, "train", "--features", type_=str, default="",
         help_="comma-separated composite labels; skips ranking")
    _add_tournament_opts(p, "train")
    _opt(p, "train", "--teacher-stages", type_=int, default=2,
         help_="teacher cascade stages")
    _opt(p, "train", "--teacher-hidden", type_=int, default=20,
         help_="teacher hidden units per stage")
    _opt(p, "train", "--teacher-epochs", type_=int, default=80,
         help_="teacher fit epochs per stage")
    _opt(p, "train", "--distill-v", type_=int, default=4,
         help_="Gaussian units per subnet during round-robin distillation")
    _opt(p, "train", "--distill-epochs", type_=int, default=15,
         help_="fit epochs per subnet per distillation round")
    _opt(p, "train", "--patience", type_=int, default=2,
         help_="rejected rounds tolerated before stopping")
    _opt(p, "train", "--max-rounds", type_=int, default=20,
         help_="maximum accepted distillation rounds")
    _opt(p, "train", "--final-v", type_=int, default=6,
         help_="Gaussian units per final subnet")
    _opt(p, "train", "--final-epochs", type_=int, default=60,
         help_="fit epochs per final subnet")

    p = subs.add_parser("eval", help="score a dataset with a saved model")
    common(p, "eval", with_seed=True)
    data_opt(p, "eval")
    _opt(p, "eval", "--model", type_=str, default=None, help_="model JSON path")

    p = subs.add_parser("explain", help="contribution curves and window maps")
    common(p, "explain")
    data_opt(p, "explain")
    _opt(p, "explain", "--model", type_=str, default=None, help_="model JSON path")
    _opt(p, "explain", "--window-cells", type_=int, default=50,
         help_="window edge length in cells")
    _opt(p, "explain", "--ld-source", type_=str, default="mapped",
         choices=("mapped", "modeled"),
         help_="landslide mask source for window statistics")
    _opt(p, "explain", "--threshold", type_=float, default=None,
         help_="decision threshold (default: model metadata)")
    _opt(p, "explain", "--curve-samples", type_=int, default=200,
         help_="samples per contribution curve")
    _opt(p, "explain", "--geometry", type_=str, default="",
         help_="reference ESRI ASCII grid for output raster coordinates")
    _opt(p, "explain", "--logr-model", type_=str, default="",
         help_="optional logistic model for a normalized-delta table")
    _opt(p, "explain", "--logr-threshold", type_=float, default=None,
         help_="probability threshold for the logistic table")

    p = subs.add_parser("baseline", help="comparison models")
    p.add_argument("which", choices=("fi", "lr", "logr", "mlp"),
                   help="which baseline to run")
    common(p, "baseline")
    data_opt(p, "baseline", required=False)
    _opt(p, "baseline", "--slope", type_=str, default="",
         help_="slope-tangent raster (fi)")
    _opt(p, "baseline", "--area", type_=str, default="",
         help_="drainage-area raster (fi)")
    _opt(p, "baseline", "--precip", type_=str, default="",
         help_="precipitation raster (fi)")
    _opt(p, "baseline", "--q", type_=float, default=1e-5,
         help_="constant precipitation when no raster is given (fi)")
    _opt(p, "baseline", "--s0", type_=float, default=1.0,
         help_="threshold slope tangent (fi)")
    _opt(p, "baseline", "--t-trans", type_=float, default=1e-4,
         help_="saturated transmissivity m^2/s (fi)")
    _opt(p, "baseline", "--rho-w", type_=float, default=1.0,
         help_="water density g/cm^3 (fi)")
    _opt(p, "baseline", "--rho-s", type_=float, default=2.0,
         help_="saturated soil density g/cm^3 (fi)")
    _opt(p, "baseline", "--b", type_=float, default=None,
         help_="contour length m (fi; default: cell size)")
    _opt(p, "baseline", "--bins", type_=int, default=10,
         help_="bins per feature (lr)")

    p = subs.add_parser("toy", help="four-input Boolean benchmark end to end")
    common(p, "toy")
    _opt(p, "toy", "--n-samples", type_=int, default=1000,
         help_="number of random samples")
    _opt(p, "toy", "--noise-sigma", type_=float, default=0.0,
         help_="input noise level")
    _opt(p, "toy", "--data-seed", type_=int, default=7,
         help_="seed of the sampled dataset")
    _opt(p, "toy", "--n-groups", type_=int, default=600,
         help_="tournament groups")

    p = subs.add_parser("demo-data", help="write a synthetic raster demo")
    common(p, "demo-data")
    _opt(p, "demo-data", "--nrows", type_=int, default=120, help_="raster rows")
    _opt(p, "demo-data", "--ncols", type_=int, default=160, help_="raster cols")
    _opt(p, "demo-data", "--cellsize", type_=float, default=30.0,
         help_="cell size in meters")
    _opt(p, "demo-data", "--train-fraction", type_=float, default=0.7,
         help_="checkerboard train fraction")
    _opt(p, "demo-data", "--block", type_=int, default=16,
         help_="checkerboard tile size in cells")

    return parser


_HANDLERS: dict[str, Callable[[Mapping], int]] = {
    "expand": cmd_expand,
    "rank": cmd_rank,
    "train": cmd_train,
    "eval": cmd_eval,
    "explain": cmd_explain,
    "baseline": cmd_baseline,
    "toy": cmd_toy,
    "demo-data": cmd_demo_data,
}

_REQUIRED: dict[str, tuple[str, ...]] = {
    "expand": ("out",),
    "rank": ("out", "data"),
    "train": ("out", "data"),
    "eval": ("out", "data", "model"),
    "explain": ("out", "data", "model"),
    "baseline": ("out",),
    "toy": ("out",),
    "demo-data": ("out",),
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage and 0 on --help; fold usage into 1
        return 0 if exc.code in (0, None) else 1
    if args.command is None:
        parser.print_help()
        return 1
    try:
        cfg = _merge_config(args.command, args)
        if args.command == "baseline":
            cfg["which"] = args.which
            if args.which == "fi":
                if not cfg["slope"] or not cfg["area"]:
                    raise UsageError("baseline fi needs --slope and --area")
            elif not cfg["data"]:
                raise UsageError(f"baseline {args.which} needs --data")
        for key in _REQUIRED[args.command]:
            if not cfg.get(key):
                raise UsageError(f"missing required option --{key.replace('_', '-')}")
        return _HANDLERS[args.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
