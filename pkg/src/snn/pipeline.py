"""End-to-end training pipeline: expand -> rank -> select -> teach -> distill
-> superpose, with evaluation metadata attached to the returned model.

Every randomized step derives its stream from the single top-level seed, so
a (dataset, config) pair maps to exactly one model.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .distill import (
    DistillConfig,
    FractionalResult,
    fractional_distill,
    parallel_distill,
    superpose,
)
from .errors import DataError
from .metrics import auroc, optimal_threshold, roc_curve
from .monomials import CompositeDesign, Monomial, composite_design, expand
from .rbf import SnnModel
from .teacher import TeacherConfig, TeacherModel, soft_targets, train_teacher
from .tournament import (
    Ranking,
    Selection,
    TournamentConfig,
    forward_select,
    run_tournament,
)

__all__ = ["PipelineConfig", "TrainResult", "train_snn"]


@dataclass(frozen=True)
class PipelineConfig:
    """Hyperparameters of the full training pipeline.

    The top-level ``seed`` overrides the seeds of all stage configs, so one
    value controls every random draw.
    """

    seed: int = 0
    level: int = 2
    multilinear: bool = False
    convention: str = "raw-product-then-standardize"
    tournament: TournamentConfig = field(default_factory=TournamentConfig)
    teacher: TeacherConfig = field(default_factory=TeacherConfig)
    distill: DistillConfig = field(default_factory=DistillConfig)
    threads: int | None = None

    def seeded(self) -> "PipelineConfig":
        return replace(
            self,
            tournament=replace(self.tournament, seed=self.seed),
            teacher=replace(self.teacher, seed=self.seed),
            distill=replace(self.distill, seed=self.seed),
        )


@dataclass(frozen=True)
class TrainResult:
    """Everything the training run produced, for reporting and export."""

    model: SnnModel
    candidates: tuple[Monomial, ...]
    dropped_candidates: tuple[str, ...]
    ranking: Ranking | None
    selection: Selection
    teacher: TeacherModel
    fractional: FractionalResult
    subnet_rmse: dict[str, float]
    student_rmse_vs_teacher: float
    fractional_rmse_vs_teacher: float
    train_auroc: float
    test_auroc: float | None
    threshold: float
    threshold_fpr: float
    threshold_tpr: float


def _drop_degenerate(
    candidates: Sequence[Monomial], ds: Dataset, convention: str
) -> tuple[list[Monomial], list[str]]:
    """Remove composites that are constant on the train partition."""
    from .dataset import Standardizer
    from .monomials import evaluate_matrix

    if convention == "standardize-then-product":
        base = Standardizer.fit(
            ds.X[ds.train_indices()], ds.feature_names
        ).transform(ds.X)
    else:
        base = ds.X
    raw = evaluate_matrix(candidates, base)
    std = raw[ds.train_indices()].std(axis=0)
    kept = [m for m, s in zip(candidates, std) if s > 0.0]
    dropped = [
        m.label(ds.feature_names) for m, s in zip(candidates, std) if s <= 0.0
    ]
    return kept, dropped


def train_snn(
    ds: Dataset,
    cfg: PipelineConfig | None = None,
    features: Sequence[Monomial] | None = None,
) -> TrainResult:
    """Run the full pipeline on a partitioned dataset.

    The dataset must carry a train partition with both classes; a test
    partition is optional (test metrics are omitted without one). Passing
    ``features`` skips expansion, ranking, and forward selection and
    distills exactly those composites. The returned model embeds the
    selection, the decision threshold (closest ROC point to the ideal
    corner, computed on the train partition), and the headline metrics in
    its metadata.
    """
    cfg = (cfg or PipelineConfig()).seeded()
    tr = ds.train_indices()
    if tr.size == 0:
        raise DataError("train partition is empty")
    if features is not None:
        candidates = list(features)
        dropped: tuple[str, ...] = ()
        ranking = None
        selection = Selection(
            monomials=tuple(candidates),
            labels=tuple(m.label(ds.feature_names) for m in candidates),
            steps=(),
            val_auroc=float("nan"),
        )
    else:
        candidates = expand(ds.n_features, cfg.level, multilinear=cfg.multilinear)
        candidates, dropped = _drop_degenerate(candidates, ds, cfg.convention)
        if dropped:
            warnings.warn(
                "dropping composites constant on the train partition: "
                + ", ".join(dropped),
                stacklevel=2,
            )
        if not candidates:
            raise DataError("no usable composite features after expansion")
        design = composite_design(candidates, ds, convention=cfg.convention)

        ranking = run_tournament(
            candidates, ds, cfg.tournament, design=design, threads=cfg.threads
        )
        selection = forward_select(
            ranking, ds, cfg.tournament, design=design, threads=cfg.threads
        )
    sel_design = composite_design(selection.monomials, ds, convention=cfg.convention)

    teacher = train_teacher(
        ds, selection.monomials, cfg.teacher, design=sel_design,
        convention=cfg.convention,
    )
    ts0 = teacher.predict_from_chi(sel_design.chi)

    fractional = fractional_distill(
        ts0, selection.monomials, ds, cfg.distill, design=sel_design
    )
    fits = parallel_distill(
        fractional.offsets,
        selection.monomials,
        ds,
        cfg.distill,
        design=sel_design,
        threads=cfg.threads,
    )

    original_std = None
    if cfg.convention == "standardize-then-product":
        from .dataset import Standardizer

        original_std = Standardizer.fit(ds.X[tr], ds.feature_names)
    model = superpose(
        fits,
        sel_design,
        ds.feature_names,
        convention=cfg.convention,
        original_standardizer=original_std,
    )

    scores_all = model.predict(ds.X)
    scores_tr = scores_all[tr]
    train_auroc = auroc(scores_tr, ds.y[tr])
    te = ds.test_indices()
    test_auroc = None
    if te.size and np.unique(ds.y[te]).size == 2:
        test_auroc = auroc(scores_all[te], ds.y[te])
    threshold, t_fpr, t_tpr = optimal_threshold(roc_curve(scores_tr, ds.y[tr]))

    student_rmse = float(np.sqrt(np.mean((scores_tr - ts0[tr]) ** 2)))
    frac_rmse = float(np.sqrt(np.mean(fractional.residual[tr] ** 2)))
    if student_rmse > frac_rmse + 1e-3:
        warnings.warn(
            f"superposed model tracks the teacher worse (RMSE {student_rmse:.4g}) "
            f"than the fractional decomposition did ({frac_rmse:.4g}); consider "
            "more Gaussian units or epochs for the final subnets",
            stacklevel=2,
        )

    metadata = {
        "seed": cfg.seed,
        "level": cfg.level,
        "multilinear": cfg.multilinear,
        "selection": list(selection.labels),
        "threshold": threshold,
        "train_auroc": train_auroc,
        "test_auroc": test_auroc,
        "teacher_train_auroc": teacher.report["train_auroc"],
        "distill_rounds": fractional.rounds,
    }
    model = replace(model, metadata=metadata)
    return TrainResult(
        model=model,
        candidates=tuple(candidates),
        dropped_candidates=tuple(dropped),
        ranking=ranking,
        selection=selection,
        teacher=teacher,
        fractional=fractional,
        subnet_rmse={f.label: f.rmse for f in fits},
        student_rmse_vs_teacher=student_rmse,
        fractional_rmse_vs_teacher=frac_rmse,
        train_auroc=train_auroc,
        test_auroc=test_auroc,
        threshold=threshold,
        threshold_fpr=t_fpr,
        threshold_tpr=t_tpr,
    )
