"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from snn.dataset import Dataset, checkerboard_split


def auroc_pairwise(scores: np.ndarray, labels: np.ndarray) -> float:
    """O(n_pos * n_neg) AUROC oracle: fraction of positive/negative pairs
    ranked correctly, ties counted half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (pos.size * neg.size)


def finite_difference_jacobian(fun, p: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference Jacobian of ``fun`` at ``p``."""
    p = np.asarray(p, dtype=float)
    f0 = np.asarray(fun(p))
    J = np.zeros((f0.size, p.size))
    for k in range(p.size):
        dp = np.zeros_like(p)
        dp[k] = h
        J[:, k] = (np.asarray(fun(p + dp)) - np.asarray(fun(p - dp))) / (2 * h)
    return J


def make_dataset(
    n: int = 200,
    n_features: int = 3,
    seed: int = 0,
    separation: float = 2.0,
    names: tuple[str, ...] | None = None,
) -> Dataset:
    """A linearly separable-ish two-class dataset: class shifts x0."""
    rng = np.random.default_rng(seed)
    X = rng.normal(0.0, 1.0, size=(n, n_features))
    y = (rng.random(n) < 0.5).astype(float)
    X[:, 0] += separation * y
    if names is None:
        names = tuple(f"f{i}" for i in range(n_features))
    return Dataset(feature_names=names, X=X, y=y)


@pytest.fixture
def small_ds() -> Dataset:
    return make_dataset(200, 3, seed=1)


@pytest.fixture
def split_ds() -> Dataset:
    return checkerboard_split(make_dataset(400, 3, seed=2), train_fraction=0.7,
                              block=16, seed=0)
