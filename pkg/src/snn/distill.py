"""Knowledge distillation of the teacher into superposable subnets.

Fractional phase: round-robin over the selected features, fitting a small
Gaussian subnet to the *running residual* of the teacher's soft targets and
subtracting its output, so each feature accumulates the fraction of the
signal it can explain. A round is kept only if the AUROC of the accumulated
outputs (against the binary labels) has not degraded; degrading rounds are
rolled back, and the loop stops after ``patience`` consecutive rollbacks or
``max_rounds`` kept rounds.

Parallel phase: each feature's accumulated target is refit independently by
one final subnet (richer Gaussian budget), and the subnets are superposed —
summed with unit output weights — into the final model.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._util import parallel_map, rng_for, stable_seed
from .dataset import Dataset, Standardizer, class_weights, weight_vector
from .errors import DataError, NumericalError
from .lm import LmConfig
from .metrics import auroc
from .monomials import CompositeDesign, Monomial, composite_design
from .rbf import SnnModel, SnnSubnet, SubnetParams, fit_subnet, subnet_eval

__all__ = [
    "DistillConfig",
    "TraceRow",
    "FractionalResult",
    "fractional_distill",
    "SubnetFit",
    "parallel_distill",
    "superpose",
]


@dataclass(frozen=True)
class DistillConfig:
    """Distillation settings for both phases.

    ``v``/``epochs`` size the fractional-stage nets (small on purpose: each
    round only skims the residual it can explain); ``final_v``/
    ``final_epochs`` size the one-per-feature subnets of the parallel phase.
    """

    v: int = 4
    epochs: int = 15
    patience: int = 2
    max_rounds: int = 20
    final_v: int = 6
    final_epochs: int = 60
    seed: int = 0

    def __post_init__(self) -> None:
        if self.v < 1 or self.final_v < 1:
            raise ValueError("need at least one Gaussian unit per subnet")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.max_rounds < 1:
            raise ValueError(f"max_rounds must be >= 1, got {self.max_rounds}")


@dataclass(frozen=True)
class TraceRow:
    """One fractional step: residual RMSE and accumulated-score AUROC
    measured on the train partition right after the feature's update."""

    round: int
    label: str
    rmse: float
    auroc: float


@dataclass(frozen=True)
class FractionalResult:
    """Outcome of the fractional phase.

    ``offsets`` has one column per feature over *all* dataset rows:
    the accumulated per-feature targets ts_i. The bookkeeping identity
    ``residual = soft_targets - offsets.sum(axis=1)`` holds elementwise to
    float accumulation error. ``trace`` only records kept rounds, so its
    round-end AUROC sequence is non-decreasing.
    """

    labels: tuple[str, ...]
    offsets: np.ndarray
    residual: np.ndarray
    trace: tuple[TraceRow, ...]
    rounds: int
    stop_reason: str

    def per_round_auroc(self) -> tuple[float, ...]:
        ends: dict[int, float] = {}
        for row in self.trace:
            ends[row.round] = row.auroc
        return tuple(ends[r] for r in sorted(ends))


def fractional_distill(
    ts0: np.ndarray,
    features: Sequence[Monomial],
    ds: Dataset,
    cfg: DistillConfig | None = None,
    design: CompositeDesign | None = None,
) -> FractionalResult:
    """Round-robin residual distillation of soft targets onto features.

    ``ts0`` are the teacher's soft targets for every dataset row; fits use
    the train partition (class-weighted), while offsets are recorded for all
    rows. Rounds that fail to hold the train AUROC of the accumulated
    offsets are rolled back and retried with fresh seeds; ``patience``
    consecutive rollbacks stop the loop.
    """
    cfg = cfg or DistillConfig()
    features = tuple(features)
    if not features:
        raise DataError("no features to distill onto")
    ts0 = np.asarray(ts0, dtype=float).ravel()
    if ts0.shape != (ds.n_samples,):
        raise DataError(
            f"soft targets length {ts0.size} does not match {ds.n_samples} samples"
        )
    if not np.all(np.isfinite(ts0)):
        raise NumericalError("soft targets contain non-finite values")
    if design is None:
        design = composite_design(features, ds)
    tr = ds.train_indices()
    y_tr = ds.y[tr]
    w_neg, w_pos = class_weights(ds)
    w_tr = weight_vector(y_tr, w_neg, w_pos)
    chi = design.chi
    m = len(features)

    residual = ts0.copy()
    offsets = np.zeros((ds.n_samples, m), dtype=float)
    trace: list[TraceRow] = []
    best = -math.inf
    kept = 0
    rejections = 0
    attempt = 0
    stop_reason = "max_rounds"
    while kept < cfg.max_rounds:
        if rejections >= cfg.patience:
            stop_reason = "patience"
            break
        snap_res = residual.copy()
        snap_off = offsets.copy()
        rows: list[TraceRow] = []
        failed = False
        for j, label in enumerate(design.labels):
            try:
                params, _ = fit_subnet(
                    chi[tr, j],
                    residual[tr],
                    v=cfg.v,
                    weights=w_tr,
                    seed=stable_seed(cfg.seed, "fractional", attempt),
                    tag=label,
                    config=LmConfig(max_epochs=cfg.epochs),
                )
            except (NumericalError, DataError):
                failed = True
                break
            oj = subnet_eval(params, chi[:, j])
            residual -= oj
            offsets[:, j] += oj
            rows.append(
                TraceRow(
                    round=kept + 1,
                    label=label,
                    rmse=float(np.sqrt(np.mean(residual[tr] ** 2))),
                    auroc=auroc(offsets[tr].sum(axis=1), y_tr),
                )
            )
        attempt += 1
        round_auroc = rows[-1].auroc if rows else -math.inf
        if not failed and round_auroc >= best:
            best = round_auroc
            kept += 1
            rejections = 0
            trace.extend(rows)
        else:
            residual = snap_res
            offsets = snap_off
            rejections += 1
    return FractionalResult(
        labels=design.labels,
        offsets=offsets,
        residual=residual,
        trace=tuple(trace),
        rounds=kept,
        stop_reason=stop_reason,
    )


@dataclass(frozen=True)
class SubnetFit:
    """One final per-feature subnet and its fit quality on the train rows."""

    label: str
    monomial: Monomial
    params: SubnetParams
    rmse: float


# Context for parallel per-feature fitting.
_PCTX: dict = {}


def _init_parallel_ctx(ctx: dict) -> None:
    global _PCTX
    _PCTX = ctx


def _fit_one_feature(j: int) -> tuple[int, np.ndarray, float]:
    ctx = _PCTX
    cfg: DistillConfig = ctx["cfg"]
    label: str = ctx["labels"][j]
    try:
        params, _ = fit_subnet(
            ctx["chi_tr"][:, j],
            ctx["targets_tr"][:, j],
            v=cfg.final_v,
            weights=ctx["w_tr"],
            seed=stable_seed(cfg.seed, "parallel"),
            tag=label,
            config=LmConfig(max_epochs=cfg.final_epochs),
        )
    except (NumericalError, DataError) as exc:
        raise NumericalError(
            f"parallel distillation failed for feature {label!r}: {exc}"
        ) from exc
    pred = subnet_eval(params, ctx["chi_tr"][:, j])
    rmse = float(np.sqrt(np.mean((pred - ctx["targets_tr"][:, j]) ** 2)))
    return j, params.to_vector(), rmse


def parallel_distill(
    offsets: np.ndarray,
    features: Sequence[Monomial],
    ds: Dataset,
    cfg: DistillConfig | None = None,
    design: CompositeDesign | None = None,
    threads: int | None = None,
) -> list[SubnetFit]:
    """Fit one final subnet per feature to its accumulated target.

    Fits are mutually independent and seeded per feature label, so results
    are identical no matter how the work is scheduled. A failed fit raises
    ``NumericalError`` naming the feature.
    """
    cfg = cfg or DistillConfig()
    features = tuple(features)
    offsets = np.asarray(offsets, dtype=float)
    if offsets.shape != (ds.n_samples, len(features)):
        raise DataError(
            f"offsets shape {offsets.shape}, expected "
            f"({ds.n_samples}, {len(features)})"
        )
    if design is None:
        design = composite_design(features, ds)
    tr = ds.train_indices()
    w_neg, w_pos = class_weights(ds)
    ctx = {
        "cfg": cfg,
        "labels": design.labels,
        "chi_tr": design.chi[tr],
        "targets_tr": offsets[tr],
        "w_tr": weight_vector(ds.y[tr], w_neg, w_pos),
    }
    results = parallel_map(
        _fit_one_feature,
        range(len(features)),
        threads=threads,
        initializer=_init_parallel_ctx,
        initargs=(ctx,),
    )
    fits: list[SubnetFit] = []
    for j, pvec, rmse in sorted(results, key=lambda t: t[0]):
        fits.append(
            SubnetFit(
                label=design.labels[j],
                monomial=features[j],
                params=SubnetParams.from_vector(pvec, cfg.final_v),
                rmse=rmse,
            )
        )
    return fits


def superpose(
    fits: Sequence[SubnetFit],
    design: CompositeDesign,
    feature_names: Sequence[str],
    convention: str = "raw-product-then-standardize",
    original_standardizer: Standardizer | None = None,
    metadata: dict | None = None,
) -> SnnModel:
    """Assemble fitted subnets into the final superposable model.

    The model's evaluation is the plain (unit-weight) sum of subnet
    outputs; each subnet carries its composite's train-partition
    standardization so the model applies to raw feature rows.
    """
    fits = list(fits)
    if not fits:
        raise DataError("no subnets to superpose")
    col_of = {lab: j for j, lab in enumerate(design.labels)}
    subnets = []
    for fit in fits:
        if fit.label not in col_of:
            raise DataError(f"design lacks composite {fit.label!r}")
        j = col_of[fit.label]
        subnets.append(
            SnnSubnet(
                monomial=fit.monomial,
                label=fit.label,
                chi_mean=float(design.mean[j]),
                chi_std=float(design.std[j]),
                params=fit.params,
            )
        )
    return SnnModel(
        feature_names=tuple(feature_names),
        subnets=tuple(subnets),
        composite_convention=convention,
        original_standardizer=original_standardizer,
        metadata=dict(metadata or {}),
    )
