"""Ranking and classification metrics for binary susceptibility scores.

The ROC construction groups tied scores into single sweep points, which
makes the trapezoidal AUROC exactly the pairwise probability
``P(score_pos > score_neg) + 0.5 * P(score_pos == score_neg)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dataset import Dataset, cv_subsample
from .errors import DataError

__all__ = [
    "RocCurve",
    "roc_curve",
    "auroc",
    "SuccessRateCurve",
    "success_rate_curve",
    "optimal_threshold",
    "Confusion",
    "confusion",
    "CvAurocCi",
    "cv_auroc_ci",
]


def _check_scores_labels(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels, dtype=float).ravel()
    if scores.shape != labels.shape:
        raise DataError(f"scores shape {scores.shape} vs labels shape {labels.shape}")
    if scores.size == 0:
        raise DataError("need at least one sample")
    if not np.all(np.isfinite(scores)):
        raise DataError("scores must be finite")
    if not np.all(np.isin(labels, (0.0, 1.0))):
        raise DataError("labels must be 0 or 1")
    if not (np.any(labels == 1.0) and np.any(labels == 0.0)):
        raise DataError("labels must contain both classes")
    return scores, labels


@dataclass(frozen=True)
class RocCurve:
    """Receiver operating characteristic sweep.

    ``thresholds`` descend; each point (fpr[i], tpr[i]) is the operating
    point of the rule ``score >= thresholds[i]``. The first threshold is
    +inf (nothing flagged, the (0, 0) corner) and the last is the minimum
    score (everything flagged, the (1, 1) corner). Tied scores share one
    point.
    """

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray


def roc_curve(scores: np.ndarray, labels: np.ndarray) -> RocCurve:
    """ROC curve with tie grouping; starts at (0, 0), ends at (1, 1)."""
    scores, labels = _check_scores_labels(scores, labels)
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    # last occurrence of each distinct score in the descending order
    distinct_last = np.flatnonzero(np.diff(s) != 0.0)
    idx = np.concatenate([distinct_last, [s.size - 1]])
    tp = np.cumsum(y)[idx]
    fp = np.cumsum(1.0 - y)[idx]
    n_pos = float(np.sum(y))
    n_neg = float(y.size - n_pos)
    thresholds = np.concatenate([[np.inf], s[idx]])
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    return RocCurve(thresholds=thresholds, fpr=fpr, tpr=tpr)


def auroc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Trapezoidal area under the tie-grouped ROC curve."""
    curve = roc_curve(scores, labels)
    dx = np.diff(curve.fpr)
    mids = (curve.tpr[1:] + curve.tpr[:-1]) / 2.0
    return float(np.sum(dx * mids))


@dataclass(frozen=True)
class SuccessRateCurve:
    """Fraction of area flagged vs fraction of positives captured.

    Sweeping the threshold from high to low, ``flagged[i]`` is the fraction
    of all samples with score >= threshold and ``captured[i]`` the fraction
    of positives among them that are caught. ``area`` is the trapezoidal
    area under captured(flagged).
    """

    thresholds: np.ndarray
    flagged: np.ndarray
    captured: np.ndarray
    area: float


def success_rate_curve(scores: np.ndarray, labels: np.ndarray) -> SuccessRateCurve:
    """Success-rate (captured-vs-flagged) curve from (0,0) to (1,1)."""
    scores, labels = _check_scores_labels(scores, labels)
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    distinct_last = np.flatnonzero(np.diff(s) != 0.0)
    idx = np.concatenate([distinct_last, [s.size - 1]])
    tp = np.cumsum(y)[idx]
    flagged = (idx + 1).astype(float) / s.size
    captured = tp / float(np.sum(y))
    thresholds = np.concatenate([[np.inf], s[idx]])
    flagged = np.concatenate([[0.0], flagged])
    captured = np.concatenate([[0.0], captured])
    dx = np.diff(flagged)
    mids = (captured[1:] + captured[:-1]) / 2.0
    return SuccessRateCurve(
        thresholds=thresholds,
        flagged=flagged,
        captured=captured,
        area=float(np.sum(dx * mids)),
    )


def optimal_threshold(curve: RocCurve) -> tuple[float, float, float]:
    """Operating point closest to the ideal (0, 1) corner.

    Minimizes ``sqrt(fpr^2 + (1 - tpr)^2)``; exact ties resolve to the
    higher threshold (the more conservative rule). Returns
    ``(threshold, fpr, tpr)``. The +inf "flag nothing" point is eligible
    like any other sweep point.
    """
    d = np.sqrt(curve.fpr**2 + (1.0 - curve.tpr) ** 2)
    best = int(np.argmin(d))  # argmin takes the first (highest-threshold) tie
    return float(curve.thresholds[best]), float(curve.fpr[best]), float(curve.tpr[best])


@dataclass(frozen=True)
class Confusion:
    """Confusion counts and summary rates at a fixed threshold."""

    tp: int
    fn: int
    fp: int
    tn: int
    accuracy: float
    pod: float
    pofd: float


def confusion(scores: np.ndarray, labels: np.ndarray, threshold: float) -> Confusion:
    """Confusion matrix for the rule ``score >= threshold``.

    ``pod`` (probability of detection) is TP/(TP+FN); ``pofd`` (probability
    of false detection) is FP/(FP+TN).
    """
    scores, labels = _check_scores_labels(scores, labels)
    pred = scores >= threshold
    pos = labels == 1.0
    tp = int(np.sum(pred & pos))
    fn = int(np.sum(~pred & pos))
    fp = int(np.sum(pred & ~pos))
    tn = int(np.sum(~pred & ~pos))
    n = tp + fn + fp + tn
    return Confusion(
        tp=tp,
        fn=fn,
        fp=fp,
        tn=tn,
        accuracy=(tp + tn) / n,
        pod=tp / (tp + fn),
        pofd=fp / (fp + tn),
    )


@dataclass(frozen=True)
class CvAurocCi:
    """Subsampled AUROC summary: mean, normal 95% CI, and 2-sigma range."""

    aurocs: tuple[float, ...]
    mean: float
    ci_low: float
    ci_high: float
    two_sigma_low: float
    two_sigma_high: float


def cv_auroc_ci(
    train_eval_fn: Callable[[Dataset, np.ndarray, np.ndarray], float],
    ds: Dataset,
    trials: int = 10,
    seed: int = 0,
) -> CvAurocCi:
    """Uncertainty of a test AUROC under repeated 50% subsampling.

    Each trial subsamples half of the train and half of the test partition
    (deterministically in ``(seed, trial)``), calls
    ``train_eval_fn(ds, train_idx, test_idx)``, and records the returned
    AUROC. The summary uses the normal approximation:
    mean +/- 1.96 * sd / sqrt(trials), plus the mean +/- 2 * sd range.
    """
    if trials < 2:
        raise ValueError(f"need at least 2 trials, got {trials}")
    vals = []
    for trial in range(trials):
        tr_idx, te_idx = cv_subsample(ds, trial, seed=seed)
        vals.append(float(train_eval_fn(ds, tr_idx, te_idx)))
    arr = np.asarray(vals, dtype=float)
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1))
    half = 1.96 * sd / np.sqrt(trials)
    return CvAurocCi(
        aurocs=tuple(vals),
        mean=mean,
        ci_low=mean - half,
        ci_high=mean + half,
        two_sigma_low=mean - 2.0 * sd,
        two_sigma_high=mean + 2.0 * sd,
    )
