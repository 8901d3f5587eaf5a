"""Comparison models: physically based failure index, likelihood ratios,
screened logistic regression, and a small first-order-trained neural net.

These give the interpretable superposition model something to be compared
against on the same datasets and metrics. The failure index operates on
rasters; the statistical baselines operate on a Dataset and share the
versioned text serialization used by the subnet model.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._util import rng_for, to_json
from .dataset import Dataset, RasterGrid, Standardizer
from .errors import DataError, NumericalError, UsageError
from .lm import LmConfig, lm_fit

__all__ = [
    "FiParams",
    "wetness",
    "failure_index",
    "LrModel",
    "lr_train",
    "lr_score",
    "save_lr",
    "load_lr",
    "LogRModel",
    "logr_train",
    "logr_score",
    "save_logr",
    "load_logr",
    "ScreenResult",
    "collinearity_screen",
    "COLLINEARITY_LIMIT",
    "minmax_categorize",
    "MlpConfig",
    "MlpModel",
    "mlp_baseline_train",
    "mlp_score",
]

LR_FORMAT = "snn-lr/1"
LOGR_FORMAT = "snn-logr/1"

#: Pairwise |Pearson R| above which two features are considered collinear
#: (equivalent to a variance inflation factor of 5 for one pair).
COLLINEARITY_LIMIT = 0.894

#: L2 cap applied to logistic coefficients when the classes are separable
#: and the unpenalized optimum diverges.
SEPARATION_COEF_CAP = 50.0


# ---------------------------------------------------------------------------
# failure index
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiParams:
    """Physical constants of the wetness / failure-index model.

    ``s0`` is the threshold slope (tangent; default tan 45° = 1), ``t_trans``
    the saturated transmissivity in m²/s, ``rho_w``/``rho_s`` the water and
    saturated-soil densities in g/cm³, and ``b`` the contour length in meters
    (normally the raster cell size).
    """

    s0: float = 1.0
    t_trans: float = 1e-4
    rho_w: float = 1.0
    rho_s: float = 2.0
    b: float = 30.0

    def __post_init__(self) -> None:
        for name in ("s0", "t_trans", "rho_w", "rho_s", "b"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive, got {getattr(self, name)}")
        if self.rho_w >= self.rho_s:
            raise UsageError(
                f"rho_w must be below rho_s, got {self.rho_w} >= {self.rho_s}"
            )


def _check_aligned(rasters: Sequence[RasterGrid], names: Sequence[str]) -> None:
    ref = rasters[0]
    for r, name in zip(rasters[1:], names[1:]):
        if not ref.same_geometry(r):
            raise DataError(
                f"raster {name!r} is not aligned with {names[0]!r} "
                "(shape, origin, or cell size differs)"
            )


def wetness(q: RasterGrid, area: RasterGrid, slope: RasterGrid,
            params: FiParams | None = None) -> RasterGrid:
    """Steady-state relative wetness W = min(1, qA / (bT sinθ)) per cell.

    ``q`` is steady-state precipitation, ``area`` the upslope drainage area,
    and ``slope`` the slope tangent (rise over run). Cells where any input is
    NODATA, or where the slope is not positive, are NODATA in the result.
    """
    params = params or FiParams()
    _check_aligned([q, area, slope], ["q", "area", "slope"])
    valid = q.mask() & area.mask() & slope.mask() & (slope.values > 0)
    tan = np.where(valid, slope.values, 1.0)
    sin = tan / np.hypot(1.0, tan)
    w = np.minimum(
        1.0, (q.values * area.values) / (params.b * params.t_trans * sin)
    )
    out = np.where(valid, w, q.nodata)
    return RasterGrid(out, q.xllcorner, q.yllcorner, q.cellsize, q.nodata)


def failure_index(slope: RasterGrid, w: RasterGrid,
                  params: FiParams | None = None) -> RasterGrid:
    """Failure index FI = (S / S₀) · (1 − W·ρ_w/ρ_s)⁻¹ per cell.

    ``slope`` holds the slope tangent S; ``w`` the relative wetness in
    [0, 1]. With the default densities the denominator is at least 0.5, so
    FI is finite everywhere. NODATA propagates.
    """
    params = params or FiParams()
    _check_aligned([slope, w], ["slope", "w"])
    valid = slope.mask() & w.mask()
    wv = np.where(valid, w.values, 0.0)
    if wv.size and (wv.min() < 0 or wv.max() > 1):
        raise DataError(
            f"wetness values must lie in [0, 1], found range "
            f"[{wv.min():g}, {wv.max():g}]"
        )
    fi = (slope.values / params.s0) / (1.0 - wv * params.rho_w / params.rho_s)
    out = np.where(valid, fi, slope.nodata)
    return RasterGrid(out, slope.xllcorner, slope.yllcorner, slope.cellsize,
                      slope.nodata)


# ---------------------------------------------------------------------------
# likelihood ratios
# ---------------------------------------------------------------------------


def _lr_bins(values: np.ndarray, y: np.ndarray,
             bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Interior bin edges and per-bin likelihood ratios for one feature.

    Edges partition the line into ``bins`` cells: below the 10th percentile,
    equal-width cells between the 10th and 90th, and above the 90th.
    Duplicate edges (few distinct values) are merged. A bin with no samples
    at all gets LR 0 — no positives were observed there.
    """
    lo = float(np.percentile(values, 10.0))
    hi = float(np.percentile(values, 90.0))
    interior = np.linspace(lo, hi, bins - 1)
    edges = np.unique(interior)
    idx = np.searchsorted(edges, values, side="right")
    n_cells = edges.size + 1
    total = np.bincount(idx, minlength=n_cells).astype(float)
    pos = np.bincount(idx, weights=y, minlength=n_cells)
    n_pos = pos.sum()
    if n_pos == 0 or n_pos == y.size:
        raise DataError("likelihood ratios need both classes present")
    with np.errstate(invalid="ignore", divide="ignore"):
        lr = (pos / n_pos) / (total / y.size)
    lr[total == 0] = 0.0
    return edges, lr


@dataclass(frozen=True)
class LrModel:
    """Per-feature binned likelihood ratios.

    For each feature, ``edges[name]`` are the interior bin boundaries and
    ``ratios[name]`` the LR of each of the ``len(edges)+1`` cells. The score
    of a row is the sum over features of the LR of the cell its value falls
    in. The area-weighted mean LR of every feature is 1 by construction.
    """

    feature_names: tuple[str, ...]
    edges: Mapping[str, np.ndarray]
    ratios: Mapping[str, np.ndarray]

    def as_dict(self) -> dict:
        return {
            "format": LR_FORMAT,
            "feature_names": list(self.feature_names),
            "edges": {n: [float(v) for v in self.edges[n]]
                      for n in self.feature_names},
            "ratios": {n: [float(v) for v in self.ratios[n]]
                       for n in self.feature_names},
        }

    @staticmethod
    def from_dict(d: Mapping) -> "LrModel":
        fmt = d.get("format")
        if fmt != LR_FORMAT:
            raise DataError(
                f"unsupported LR model format {fmt!r} (this build reads {LR_FORMAT!r})"
            )
        names = tuple(d["feature_names"])
        return LrModel(
            feature_names=names,
            edges={n: np.asarray(d["edges"][n], dtype=float) for n in names},
            ratios={n: np.asarray(d["ratios"][n], dtype=float) for n in names},
        )


def lr_train(ds: Dataset, features: Sequence[str] | None = None,
             bins: int = 10) -> LrModel:
    """Fit per-feature likelihood ratios on the train partition."""
    if bins < 2:
        raise UsageError(f"bins must be >= 2, got {bins}")
    names = tuple(features) if features is not None else ds.feature_names
    missing = [n for n in names if n not in ds.feature_names]
    if missing:
        raise DataError(f"unknown feature(s) {missing} in likelihood-ratio fit")
    tr = ds.train_indices()
    y = ds.y[tr].astype(float)
    edges: dict[str, np.ndarray] = {}
    ratios: dict[str, np.ndarray] = {}
    for name in names:
        col = ds.X[tr, ds.feature_names.index(name)]
        edges[name], ratios[name] = _lr_bins(col, y, bins)
    return LrModel(feature_names=names, edges=edges, ratios=ratios)


def lr_score(model: LrModel, X: np.ndarray,
             feature_names: Sequence[str] | None = None) -> np.ndarray:
    """Score rows as the sum over features of the matching bin's LR.

    ``X`` columns follow ``feature_names`` (default: the model's own order).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    names = tuple(feature_names) if feature_names is not None else model.feature_names
    total = np.zeros(X.shape[0], dtype=float)
    for name in model.feature_names:
        if name not in names:
            raise DataError(f"scoring input lacks feature {name!r}")
        col = X[:, names.index(name)]
        idx = np.searchsorted(model.edges[name], col, side="right")
        total = total + model.ratios[name][idx]
    return total


def save_lr(model: LrModel, path: str | Path) -> None:
    """Write an LR model as deterministic versioned JSON text."""
    Path(path).write_text(to_json(model.as_dict()) + "\n")


def load_lr(path: str | Path) -> LrModel:
    return LrModel.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# logistic regression
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScreenResult:
    """Pairwise Pearson correlations with a pass/fail verdict."""

    feature_names: tuple[str, ...]
    matrix: np.ndarray
    passed: bool
    worst_pair: tuple[str, str]
    worst_abs_r: float


def collinearity_screen(ds: Dataset,
                        features: Sequence[str] | None = None) -> ScreenResult:
    """Pearson |R| for all feature pairs; fails above COLLINEARITY_LIMIT."""
    names = tuple(features) if features is not None else ds.feature_names
    if len(names) < 2:
        raise UsageError("collinearity screen needs at least two features")
    tr = ds.train_indices()
    cols = np.stack(
        [ds.X[tr, ds.feature_names.index(n)] for n in names], axis=0
    )
    sd = cols.std(axis=1)
    flat = [names[i] for i in np.nonzero(sd == 0)[0]]
    if flat:
        raise DataError(f"zero-variance feature(s) {flat} in collinearity screen")
    r = np.corrcoef(cols)
    off = np.abs(r - np.eye(len(names)))
    i, j = np.unravel_index(np.argmax(off), off.shape)
    worst = float(np.abs(r[i, j]))
    return ScreenResult(
        feature_names=names,
        matrix=r,
        passed=worst <= COLLINEARITY_LIMIT,
        worst_pair=(names[min(i, j)], names[max(i, j)]),
        worst_abs_r=worst,
    )


@dataclass(frozen=True)
class LogRModel:
    """Logistic regression on standardized features.

    The linear index is c = b₀ + Σ b_i·(x_i − μ_i)/σ_i and the modeled
    probability p = e^c / (e^c + 1).
    """

    feature_names: tuple[str, ...]
    intercept: float
    coef: np.ndarray
    standardizer: Standardizer

    def linear_index(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.intercept + self.standardizer.transform(X) @ self.coef

    def as_dict(self) -> dict:
        return {
            "format": LOGR_FORMAT,
            "feature_names": list(self.feature_names),
            "intercept": float(self.intercept),
            "coef": [float(v) for v in self.coef],
            "standardizer": self.standardizer.as_dict(),
        }

    @staticmethod
    def from_dict(d: Mapping) -> "LogRModel":
        fmt = d.get("format")
        if fmt != LOGR_FORMAT:
            raise DataError(
                f"unsupported LogR model format {fmt!r} "
                f"(this build reads {LOGR_FORMAT!r})"
            )
        return LogRModel(
            feature_names=tuple(d["feature_names"]),
            intercept=float(d["intercept"]),
            coef=np.asarray(d["coef"], dtype=float),
            standardizer=Standardizer.from_dict(d["standardizer"]),
        )


def logr_train(ds: Dataset, features: Sequence[str] | None = None,
               config: LmConfig | None = None) -> LogRModel:
    """Maximum-likelihood logistic fit via damped Fisher scoring.

    The screen must pass first: any feature pair with |R| above
    COLLINEARITY_LIMIT aborts the fit, naming the pair. The score equations
    are solved with the shared least-squares engine by expressing the
    per-row residual as (y − p)/√(p(1−p)) with Jacobian −√(p(1−p))·x, whose
    normal equations are exactly one Fisher-scoring step. If the classes are
    separable the coefficients diverge; they are then capped at L2 norm
    SEPARATION_COEF_CAP with a warning.
    """
    names = tuple(features) if features is not None else ds.feature_names
    screen = collinearity_screen(ds, names)
    if not screen.passed:
        raise DataError(
            f"collinear features {screen.worst_pair[0]!r} and "
            f"{screen.worst_pair[1]!r}: |R| = {screen.worst_abs_r:.3f} "
            f"> {COLLINEARITY_LIMIT}"
        )
    tr = ds.train_indices()
    raw = np.stack([ds.X[tr, ds.feature_names.index(n)] for n in names], axis=1)
    std = Standardizer.fit(raw, names)
    Z = np.hstack([np.ones((raw.shape[0], 1)), std.transform(raw)])
    y = ds.y[tr].astype(float)

    def fun(beta: np.ndarray) -> np.ndarray:
        p = _sigmoid(Z @ beta)
        s = np.sqrt(np.clip(p * (1.0 - p), 1e-12, None))
        return (p - y) / s

    def jac(beta: np.ndarray) -> np.ndarray:
        p = _sigmoid(Z @ beta)
        s = np.sqrt(np.clip(p * (1.0 - p), 1e-12, None))
        return Z * s[:, None]

    prevalence = float(np.clip(y.mean(), 1e-9, 1 - 1e-9))
    beta0 = np.zeros(Z.shape[1])
    beta0[0] = np.log(prevalence / (1.0 - prevalence))
    cfg = config or LmConfig(max_epochs=100)
    result = lm_fit(fun, jac, beta0, config=cfg)
    beta = result.params
    norm = float(np.linalg.norm(beta[1:]))
    if not np.all(np.isfinite(beta)):
        raise NumericalError("logistic fit produced non-finite coefficients")
    if norm > SEPARATION_COEF_CAP:
        warnings.warn(
            f"logistic coefficients capped at L2 norm {SEPARATION_COEF_CAP:g} "
            f"(was {norm:.3g}); the classes look separable",
            stacklevel=2,
        )
        beta = beta * (SEPARATION_COEF_CAP / norm)
    return LogRModel(
        feature_names=names,
        intercept=float(beta[0]),
        coef=beta[1:].copy(),
        standardizer=std,
    )


def _sigmoid(c: np.ndarray) -> np.ndarray:
    out = np.empty_like(c, dtype=float)
    pos = c >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-c[pos]))
    e = np.exp(c[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logr_score(model: LogRModel, X: np.ndarray) -> np.ndarray:
    """Modeled probability p = e^c/(e^c + 1) for raw feature rows.

    Clipped away from exact 0/1 so the open-interval bound survives
    floating-point saturation at extreme linear indices.
    """
    p = _sigmoid(model.linear_index(X))
    return np.clip(p, 1e-15, 1.0 - 1e-15)


def save_logr(model: LogRModel, path: str | Path) -> None:
    """Write a LogR model as deterministic versioned JSON text."""
    Path(path).write_text(to_json(model.as_dict()) + "\n")


def load_logr(path: str | Path) -> LogRModel:
    return LogRModel.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# percentile categorization
# ---------------------------------------------------------------------------


def _fit_categories(values: np.ndarray) -> np.ndarray:
    """Interior percentile edges (10th..90th) defining ten categories."""
    edges = np.unique(np.percentile(values, np.arange(10.0, 91.0, 10.0)))
    return edges


def _apply_categories(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    return np.searchsorted(edges, values, side="right").astype(float)


def minmax_categorize(values: np.ndarray, upper: float = 0.9,
                      lower: float = 0.1) -> np.ndarray:
    """Map values into [lower, upper] via ten percentile categories.

    Values are assigned to categories bounded by their own 10th..90th
    percentiles, and the category index is rescaled linearly so the lowest
    observed category maps to ``lower`` and the highest to ``upper``.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise UsageError("cannot categorize an empty array")
    cats = _apply_categories(values, _fit_categories(values))
    cmin, cmax = cats.min(), cats.max()
    if cmax == cmin:
        raise DataError("constant feature cannot be categorized")
    return (cats - cmin) / (cmax - cmin) * (upper - lower) + lower


# ---------------------------------------------------------------------------
# neural-net baseline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MlpConfig:
    """Training schedule of the fully connected baseline net.

    Two hidden layers of 200 units and a two-way softmax head, trained with
    adaptive-moment minibatch updates: batch 64, initial rate 2e-4 dropped
    ×0.1 every 5 epochs, early stop after 10 epochs without validation
    improvement, at most 200 epochs.
    """

    hidden: tuple[int, int] = (200, 200)
    batch_size: int = 64
    learning_rate: float = 2e-4
    rate_drop: float = 0.1
    rate_drop_every: int = 5
    early_stop_patience: int = 10
    max_epochs: int = 200
    val_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise UsageError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise UsageError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if not 0 < self.val_fraction < 1:
            raise UsageError(
                f"val_fraction must be in (0, 1), got {self.val_fraction}"
            )


@dataclass(frozen=True)
class MlpModel:
    """Trained baseline net plus the per-feature categorizer it was fed."""

    feature_names: tuple[str, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    category_edges: tuple[np.ndarray, ...]
    category_range: tuple[tuple[float, float], ...]
    epochs_run: int
    best_val_loss: float

    def _transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        cols = []
        for j, edges in enumerate(self.category_edges):
            cats = _apply_categories(X[:, j], edges)
            cmin, cmax = self.category_range[j]
            cols.append((cats - cmin) / (cmax - cmin) * 0.8 + 0.1)
        return np.stack(cols, axis=1)

    def _forward(self, Z: np.ndarray) -> np.ndarray:
        h = Z
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ W + b, 0.0)
        logits = h @ self.weights[-1] + self.biases[-1]
        return _softmax(logits)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def mlp_baseline_train(ds: Dataset, cfg: MlpConfig | None = None) -> MlpModel:
    """Train the baseline net on categorized features of the train partition.

    Each feature is reduced to ten percentile categories mapped into
    [0.1, 0.9] before entering the net; a seeded 20% slice of the train
    partition is held out to drive early stopping, and the parameters with
    the best validation loss are returned.
    """
    cfg = cfg or MlpConfig()
    tr = ds.train_indices()
    y = ds.y[tr].astype(int)
    edges = []
    ranges = []
    cols = []
    for j, name in enumerate(ds.feature_names):
        e = _fit_categories(ds.X[tr, j])
        cats = _apply_categories(ds.X[tr, j], e)
        cmin, cmax = float(cats.min()), float(cats.max())
        if cmax == cmin:
            raise DataError(f"constant feature {name!r} cannot be categorized")
        edges.append(e)
        ranges.append((cmin, cmax))
        cols.append((cats - cmin) / (cmax - cmin) * 0.8 + 0.1)
    Z = np.stack(cols, axis=1)

    rng = rng_for(cfg.seed, "mlp-split")
    perm = rng.permutation(Z.shape[0])
    n_val = max(1, int(round(cfg.val_fraction * Z.shape[0])))
    val_idx, fit_idx = perm[:n_val], perm[n_val:]
    if fit_idx.size == 0:
        raise DataError("train partition too small for a validation split")
    Z_fit, y_fit = Z[fit_idx], y[fit_idx]
    Z_val, y_val = Z[val_idx], y[val_idx]

    sizes = [Z.shape[1], *cfg.hidden, 2]
    wrng = rng_for(cfg.seed, "mlp-init")
    weights = [
        wrng.normal(0.0, np.sqrt(2.0 / sizes[i]), size=(sizes[i], sizes[i + 1]))
        for i in range(len(sizes) - 1)
    ]
    biases = [np.zeros(sizes[i + 1]) for i in range(len(sizes) - 1)]
    m = [np.zeros_like(w) for w in weights] + [np.zeros_like(b) for b in biases]
    v = [np.zeros_like(w) for w in weights] + [np.zeros_like(b) for b in biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    def forward_full(Zb: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        acts = [Zb]
        h = Zb
        for W, b in zip(weights[:-1], biases[:-1]):
            h = np.maximum(h @ W + b, 0.0)
            acts.append(h)
        return acts, _softmax(h @ weights[-1] + biases[-1])

    def val_loss() -> float:
        _, p = forward_full(Z_val)
        pi = np.clip(p[np.arange(y_val.size), y_val], 1e-12, None)
        return float(-np.mean(np.log(pi)))

    best = val_loss()
    best_params = ([w.copy() for w in weights], [b.copy() for b in biases])
    stall = 0
    epochs_run = 0
    srng = rng_for(cfg.seed, "mlp-shuffle")
    for epoch in range(cfg.max_epochs):
        lr = cfg.learning_rate * cfg.rate_drop ** (epoch // cfg.rate_drop_every)
        order = srng.permutation(Z_fit.shape[0])
        for start in range(0, order.size, cfg.batch_size):
            rows = order[start:start + cfg.batch_size]
            acts, p = forward_full(Z_fit[rows])
            if not np.all(np.isfinite(p)):
                raise NumericalError("baseline net diverged (non-finite loss)")
            delta = p.copy()
            delta[np.arange(rows.size), y_fit[rows]] -= 1.0
            delta /= rows.size
            grads_w = []
            grads_b = []
            for layer in range(len(weights) - 1, -1, -1):
                grads_w.append(acts[layer].T @ delta)
                grads_b.append(delta.sum(axis=0))
                if layer > 0:
                    delta = (delta @ weights[layer].T) * (acts[layer] > 0)
            grads_w.reverse()
            grads_b.reverse()
            step += 1
            flat_params = weights + biases
            flat_grads = grads_w + grads_b
            for i, (prm, g) in enumerate(zip(flat_params, flat_grads)):
                m[i] = beta1 * m[i] + (1 - beta1) * g
                v[i] = beta2 * v[i] + (1 - beta2) * g * g
                mhat = m[i] / (1 - beta1**step)
                vhat = v[i] / (1 - beta2**step)
                prm -= lr * mhat / (np.sqrt(vhat) + eps)
        epochs_run = epoch + 1
        loss = val_loss()
        if loss < best - 1e-12:
            best = loss
            best_params = ([w.copy() for w in weights], [b.copy() for b in biases])
            stall = 0
        else:
            stall += 1
            if stall >= cfg.early_stop_patience:
                break
    return MlpModel(
        feature_names=ds.feature_names,
        weights=tuple(best_params[0]),
        biases=tuple(best_params[1]),
        category_edges=tuple(edges),
        category_range=tuple(ranges),
        epochs_run=epochs_run,
        best_val_loss=best,
    )


def mlp_score(model: MlpModel, X: np.ndarray) -> np.ndarray:
    """Positive-class probability for raw feature rows."""
    return model._forward(model._transform(X))[:, 1]
