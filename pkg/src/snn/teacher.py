"""Multistage teacher network: a cascade of small dense stages fit by
damped least squares, producing soft targets for distillation.

Stage 1 regresses the binary labels on the selected composite features;
every later stage sees the same features plus the outputs of all earlier
stages and regresses the same labels. Each stage is one hidden layer of tanh
units plus a direct linear bypass from its inputs to the output:

    out = w2 . tanh(W1 x + b1) + u . x + b2

The bypass lets stage k start as an exact pass-through of stage k-1's output
(tanh branch silenced, u selecting the incumbent), so adding a stage can
only hold or reduce the train weighted SSE. Outputs are never squashed —
distillation needs signed, unbounded targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._util import rng_for, stable_seed
from .dataset import Dataset, class_weights, weight_vector
from .errors import DataError
from .lm import LmConfig, lm_fit
from .metrics import auroc
from .monomials import CompositeDesign, Monomial, composite_design

__all__ = ["StageParams", "TeacherConfig", "TeacherModel", "train_teacher", "soft_targets"]


@dataclass(frozen=True)
class StageParams:
    """One dense stage: hidden tanh layer plus linear bypass."""

    W1: np.ndarray  # (hidden, d_in)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    u: np.ndarray  # (d_in,)
    b2: float

    @property
    def hidden(self) -> int:
        return self.w2.size

    @property
    def d_in(self) -> int:
        return self.u.size

    def eval(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.tanh(X @ self.W1.T + self.b1) @ self.w2 + X @ self.u + self.b2

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.W1.ravel(), self.b1, self.w2, self.u, [self.b2]]
        )

    @staticmethod
    def from_vector(p: np.ndarray, hidden: int, d_in: int) -> "StageParams":
        p = np.asarray(p, dtype=float)
        hw = hidden * d_in
        return StageParams(
            W1=p[:hw].reshape(hidden, d_in),
            b1=p[hw : hw + hidden],
            w2=p[hw + hidden : hw + 2 * hidden],
            u=p[hw + 2 * hidden : hw + 2 * hidden + d_in],
            b2=float(p[-1]),
        )


def _stage_jacobian(stage: StageParams, X: np.ndarray) -> np.ndarray:
    """Partials of stage outputs w.r.t. [W1, b1, w2, u, b2]."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    h, d = stage.hidden, stage.d_in
    T = np.tanh(X @ stage.W1.T + stage.b1)  # (n, h)
    G = (1.0 - T * T) * stage.w2  # (n, h): d out / d preactivation
    J = np.empty((n, h * d + 2 * h + d + 1), dtype=float)
    J[:, : h * d] = np.einsum("nh,nd->nhd", G, X).reshape(n, h * d)
    J[:, h * d : h * d + h] = G
    J[:, h * d + h : h * d + 2 * h] = T
    J[:, h * d + 2 * h : h * d + 2 * h + d] = X
    J[:, -1] = 1.0
    return J


@dataclass(frozen=True)
class TeacherConfig:
    """Teacher settings: stage count, hidden width, LM budget per stage."""

    stages: int = 2
    hidden: int = 20
    epochs: int = 80
    seed: int = 0

    def __post_init__(self) -> None:
        if self.stages < 1:
            raise ValueError(f"need >= 1 stage, got {self.stages}")
        if self.hidden < 1:
            raise ValueError(f"need >= 1 hidden unit, got {self.hidden}")


@dataclass(frozen=True)
class TeacherModel:
    """A trained multistage teacher over composite features.

    Carries the composite definitions and their train-fitted
    standardization, so soft targets can be produced for any compatible
    dataset without refitting anything.
    """

    feature_names: tuple[str, ...]
    monomials: tuple[Monomial, ...]
    labels: tuple[str, ...]
    chi_mean: np.ndarray
    chi_std: np.ndarray
    convention: str
    stages: tuple[StageParams, ...]
    report: dict = field(default_factory=dict)

    def _chi(self, ds: Dataset) -> np.ndarray:
        if tuple(ds.feature_names) != self.feature_names:
            raise DataError(
                "dataset features do not match the teacher's: "
                f"{ds.feature_names} vs {self.feature_names}"
            )
        from .monomials import evaluate_matrix

        if self.convention == "standardize-then-product":
            raise DataError(
                "teacher stored with standardize-then-product convention must "
                "be evaluated through the pipeline that owns the original "
                "standardizer"
            )
        raw = evaluate_matrix(self.monomials, ds.X)
        return (raw - self.chi_mean) / self.chi_std

    def predict_from_chi(self, chi: np.ndarray) -> np.ndarray:
        """Cascade the stages on pre-standardized composite columns."""
        X = np.asarray(chi, dtype=float)
        out = None
        inputs = X
        for stage in self.stages:
            out = stage.eval(inputs)
            inputs = np.column_stack([inputs, out])
        return out

    def predict(self, ds: Dataset) -> np.ndarray:
        return self.predict_from_chi(self._chi(ds))

    def as_dict(self) -> dict:
        return {
            "format": "snn-teacher/1",
            "feature_names": list(self.feature_names),
            "labels": list(self.labels),
            "exponents": [[[i, e] for i, e in m.exponents] for m in self.monomials],
            "chi_mean": [float(v) for v in self.chi_mean],
            "chi_std": [float(v) for v in self.chi_std],
            "convention": self.convention,
            "stages": [
                {
                    "W1": [[float(v) for v in row] for row in s.W1],
                    "b1": [float(v) for v in s.b1],
                    "w2": [float(v) for v in s.w2],
                    "u": [float(v) for v in s.u],
                    "b2": s.b2,
                }
                for s in self.stages
            ],
            "report": self.report,
        }


def _fit_stage(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    hidden: int,
    init: StageParams,
    epochs: int,
) -> tuple[StageParams, float]:
    d_in = X.shape[1]

    def residual(p: np.ndarray) -> np.ndarray:
        return StageParams.from_vector(p, hidden, d_in).eval(X) - y

    def jacobian(p: np.ndarray) -> np.ndarray:
        return _stage_jacobian(StageParams.from_vector(p, hidden, d_in), X)

    res = lm_fit(residual, jacobian, init.to_vector(), weights=weights,
                 config=LmConfig(max_epochs=epochs))
    return StageParams.from_vector(res.params, hidden, d_in), float(res.sse)


def train_teacher(
    ds: Dataset,
    features: Sequence[Monomial],
    cfg: TeacherConfig | None = None,
    design: CompositeDesign | None = None,
    convention: str = "raw-product-then-standardize",
) -> TeacherModel:
    """Train the multistage teacher on the train partition.

    Stage fits minimize the class-weighted SSE against the binary labels.
    Later stages are initialized as an exact identity on the incumbent
    stage's output, so the reported per-stage train SSE sequence never
    increases. The report also records the train AUROC next to the best
    single-composite AUROC; falling below it is flagged as a warning in the
    report rather than an exception.
    """
    cfg = cfg or TeacherConfig()
    features = tuple(features)
    if len(features) < 2:
        raise DataError(f"teacher needs >= 2 selected features, got {len(features)}")
    if design is None:
        design = composite_design(features, ds, convention=convention)
    if design.monomials != features:
        raise DataError("composite design does not match the selected features")
    tr = ds.train_indices()
    y_tr = ds.y[tr]
    if np.unique(y_tr).size < 2:
        raise DataError("train partition is single-class; cannot train teacher")
    w_neg, w_pos = class_weights(ds)
    w_tr = weight_vector(y_tr, w_neg, w_pos)
    chi_tr = design.chi[tr]

    stages: list[StageParams] = []
    stage_sse: list[float] = []
    inputs = chi_tr
    prev_out: np.ndarray | None = None
    for k in range(1, cfg.stages + 1):
        d_in = inputs.shape[1]
        rng = rng_for(cfg.seed, "teacher-stage", k)
        W1 = rng.normal(0.0, 1.0 / np.sqrt(d_in), size=(cfg.hidden, d_in))
        b1 = rng.uniform(-0.5, 0.5, size=cfg.hidden)
        if k == 1:
            init = StageParams(
                W1=W1,
                b1=b1,
                w2=rng.normal(0.0, 0.1, size=cfg.hidden),
                u=np.zeros(d_in),
                b2=float(np.mean(y_tr)),
            )
        else:
            # exact pass-through of the previous stage's output
            u = np.zeros(d_in)
            u[-1] = 1.0
            init = StageParams(W1=W1, b1=b1, w2=np.zeros(cfg.hidden), u=u, b2=0.0)
        stage, sse = _fit_stage(inputs, y_tr, w_tr, cfg.hidden, init, cfg.epochs)
        stages.append(stage)
        stage_sse.append(sse)
        prev_out = stage.eval(inputs)
        inputs = np.column_stack([inputs, prev_out])

    train_scores = prev_out
    teacher_auroc = auroc(train_scores, y_tr)
    single_aurocs = {}
    for j, label in enumerate(design.labels):
        a = auroc(chi_tr[:, j], y_tr)
        single_aurocs[label] = max(a, 1.0 - a)
    best_single = max(single_aurocs.values())
    report = {
        "stage_sse": [float(s) for s in stage_sse],
        "train_auroc": float(teacher_auroc),
        "best_single_feature_auroc": float(best_single),
        "single_feature_auroc": {k: float(v) for k, v in single_aurocs.items()},
        "warning": (
            None
            if teacher_auroc >= best_single
            else "teacher train AUROC fell below the best single composite"
        ),
    }
    return TeacherModel(
        feature_names=tuple(ds.feature_names),
        monomials=features,
        labels=design.labels,
        chi_mean=design.mean.copy(),
        chi_std=design.std.copy(),
        convention=convention,
        stages=tuple(stages),
        report=report,
    )


def soft_targets(model: TeacherModel, ds: Dataset) -> np.ndarray:
    """Raw teacher outputs per sample, in dataset order (never squashed)."""
    return model.predict(ds)
