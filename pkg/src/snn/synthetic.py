"""Seeded synthetic data: the Boolean toy problem, additive ground truths,
and a small raster landscape for end-to-end pipeline demos."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._util import rng_for
from .dataset import Dataset, RasterGrid, dataset_from_rasters
from .errors import DataError

__all__ = [
    "ToySpec",
    "gen_toy",
    "toy_truth_table",
    "toy_output",
    "AdditiveSpec",
    "gen_additive",
    "default_additive_funcs",
    "gen_raster_demo",
]

TOY_NAMES = ("x1", "x2", "x3", "x4")


@dataclass(frozen=True)
class ToySpec:
    """Configuration for the 4-input Boolean toy problem."""

    n_samples: int = 1000
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_samples < 16:
            raise DataError(f"need n_samples >= 16, got {self.n_samples}")
        if self.noise_sigma < 0:
            raise DataError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


def toy_output(B: np.ndarray) -> np.ndarray:
    """Ground truth y = x1*x2 + x3*x4 - 2*x1*x2*x3*x4 on Boolean inputs."""
    B = np.asarray(B, dtype=float)
    p = B[..., 0] * B[..., 1]
    q = B[..., 2] * B[..., 3]
    return p + q - 2.0 * p * q


def toy_truth_table() -> tuple[np.ndarray, np.ndarray]:
    """All 16 Boolean corners and their outputs, in binary-counting order."""
    corners = np.array(
        [[(k >> (3 - i)) & 1 for i in range(4)] for k in range(16)], dtype=float
    )
    return corners, toy_output(corners)


def gen_toy(spec: ToySpec | None = None, **kwargs) -> Dataset:
    """Random realizations of the Boolean toy problem.

    Inputs are uniform Booleans; the target is computed on the *clean*
    Booleans, and only afterwards is Gaussian input noise (``noise_sigma``)
    added to the stored feature columns — the labels stay exact.
    """
    spec = spec or ToySpec(**kwargs)
    rng = rng_for(spec.seed, "toy")
    B = (rng.random((spec.n_samples, 4)) < 0.5).astype(float)
    y = toy_output(B)
    X = B
    if spec.noise_sigma > 0:
        X = B + rng.normal(0.0, spec.noise_sigma, size=B.shape)
    return Dataset(feature_names=TOY_NAMES, X=X, y=y)


# ---------------------------------------------------------------------------
# Additive ground truth


def default_additive_funcs(n_features: int) -> tuple[Callable[[np.ndarray], np.ndarray], ...]:
    """A cycle of bounded shapes: saturating, linear, bump, and sinusoid."""
    shapes: list[Callable[[np.ndarray], np.ndarray]] = [
        lambda x: np.tanh(2.0 * x),
        lambda x: 0.8 * x,
        lambda x: 1.5 * np.exp(-2.0 * x * x),
        lambda x: np.sin(1.5 * x),
    ]
    return tuple(shapes[i % len(shapes)] for i in range(n_features))


@dataclass(frozen=True)
class AdditiveSpec:
    """Configuration for additive-ground-truth data.

    The continuous score is ``sum_i g_i(x_i)`` on uniform inputs over
    [-2, 2]; labels flag scores above the ``threshold_q`` quantile.
    """

    n_features: int = 10
    n_samples: int = 20000
    threshold_q: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_features < 1:
            raise DataError(f"need n_features >= 1, got {self.n_features}")
        if self.n_samples < 10:
            raise DataError(f"need n_samples >= 10, got {self.n_samples}")
        if not 0.0 < self.threshold_q < 1.0:
            raise DataError(
                f"threshold_q must be in (0, 1), got {self.threshold_q}"
            )


def gen_additive(
    spec: AdditiveSpec | None = None,
    funcs: Sequence[Callable[[np.ndarray], np.ndarray]] | None = None,
    **kwargs,
) -> tuple[Dataset, np.ndarray, tuple[Callable[[np.ndarray], np.ndarray], ...]]:
    """Data with a known additive ground truth.

    Returns ``(dataset, oracle_scores, funcs)``: the oracle is the exact
    continuous score each label was thresholded from, retained so tests can
    compare recovered per-feature curves against the truth.

    Raises
    ------
    DataError
        If thresholding produces a single class (e.g. all ``g_i`` constant).
    """
    spec = spec or AdditiveSpec(**kwargs)
    if funcs is None:
        funcs = default_additive_funcs(spec.n_features)
    funcs = tuple(funcs)
    if len(funcs) != spec.n_features:
        raise DataError(
            f"{len(funcs)} ground-truth functions for {spec.n_features} features"
        )
    rng = rng_for(spec.seed, "additive")
    X = rng.uniform(-2.0, 2.0, size=(spec.n_samples, spec.n_features))
    score = np.zeros(spec.n_samples, dtype=float)
    for i, g in enumerate(funcs):
        gi = np.asarray(g(X[:, i]), dtype=float)
        if not np.all(np.isfinite(gi)):
            raise DataError(f"ground-truth function {i} produced non-finite values")
        score += gi
    cut = float(np.quantile(score, spec.threshold_q))
    y = (score > cut).astype(float)
    if y.min() == y.max():
        raise DataError(
            "labels are single-class: the additive score is degenerate at the "
            "requested threshold (are all ground-truth functions constant?)"
        )
    names = tuple(f"x{i + 1}" for i in range(spec.n_features))
    return Dataset(feature_names=names, X=X, y=y), score, funcs


# ---------------------------------------------------------------------------
# Raster demo landscape


def _smooth_field(rng: np.random.Generator, nrows: int, ncols: int, n_bumps: int, width: float) -> np.ndarray:
    """Random smooth surface: a sum of seeded Gaussian bumps."""
    rr, cc = np.meshgrid(np.arange(nrows), np.arange(ncols), indexing="ij")
    out = np.zeros((nrows, ncols), dtype=float)
    for _ in range(n_bumps):
        r0 = rng.uniform(0, nrows)
        c0 = rng.uniform(0, ncols)
        amp = rng.uniform(-1.0, 1.0)
        w = width * rng.uniform(0.6, 1.6)
        out += amp * np.exp(-((rr - r0) ** 2 + (cc - c0) ** 2) / (2.0 * w * w))
    return out


def _flow_accumulation(elev: np.ndarray, cellsize: float) -> np.ndarray:
    """Upslope drainage area per cell in m² by steepest-descent routing.

    Cells are processed from highest to lowest; each passes its accumulated
    area (its own cell area included) to the lowest of its eight neighbors
    that sits strictly below it. Pits and flats keep what they received.
    """
    nrows, ncols = elev.shape
    acc = np.full(elev.shape, cellsize * cellsize, dtype=float)
    order = np.argsort(elev, axis=None)[::-1]
    steps = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    dist = [math.hypot(dr, dc) for dr, dc in steps]
    for flat in order:
        r, c = divmod(int(flat), ncols)
        best = None
        best_drop = 0.0
        for (dr, dc), d in zip(steps, dist):
            rr, cc = r + dr, c + dc
            if 0 <= rr < nrows and 0 <= cc < ncols:
                drop = (elev[r, c] - elev[rr, cc]) / d
                if drop > best_drop:
                    best_drop = drop
                    best = (rr, cc)
        if best is not None:
            acc[best] += acc[r, c]
    return acc


def gen_raster_demo(
    nrows: int = 120,
    ncols: int = 160,
    seed: int = 0,
    cellsize: float = 30.0,
) -> tuple[dict[str, RasterGrid], RasterGrid, Dataset]:
    """A small synthetic landscape for exercising the raster pipeline.

    Builds a smooth elevation surface, derives slope (gradient magnitude),
    aspect (dominant downslope direction in degrees), an annual-precipitation
    field with a north-south trend, and an extreme-precipitation-events
    field; susceptibility mixes slope and the climate fields through smooth
    bounded functions plus noise, and the top ~12% of cells become mapped
    "landslide" cells. Returns ``(rasters, target raster, dataset)``; the
    raster dict also carries an ``"Area"`` drainage-area grid for the
    hydrologic baseline, which is not a dataset feature.
    """
    if nrows < 20 or ncols < 20:
        raise DataError("demo raster needs at least 20x20 cells")
    rng = rng_for(seed, "raster-demo")
    elev = 400.0 * _smooth_field(rng, nrows, ncols, n_bumps=24, width=min(nrows, ncols) / 5.0)
    gr, gc = np.gradient(elev, cellsize)
    slope = np.hypot(gr, gc)  # rise over run = tan(theta)
    aspect = (np.degrees(np.arctan2(-gc, gr)) + 360.0) % 360.0
    lat = np.linspace(1.0, 0.0, nrows)[:, None] * np.ones((1, ncols))
    map_field = 1200.0 + 2000.0 * lat + 300.0 * _smooth_field(
        rng, nrows, ncols, n_bumps=12, width=min(nrows, ncols) / 3.0
    )
    nee = np.clip(
        6.0 + 5.0 * _smooth_field(rng, nrows, ncols, n_bumps=16, width=min(nrows, ncols) / 4.0),
        0.0,
        None,
    )
    score = (
        2.2 * np.tanh(slope / 0.4)
        + 1.2 * np.tanh((map_field - 2200.0) / 600.0)
        + 0.8 * np.tanh((nee - 6.0) / 3.0)
        + 0.3 * np.sin(np.radians(aspect))
        + rng.normal(0.0, 0.35, size=(nrows, ncols))
    )
    cut = np.quantile(score, 0.88)
    target_vals = (score > cut).astype(float)

    def grid(vals: np.ndarray) -> RasterGrid:
        return RasterGrid(values=vals, cellsize=cellsize)

    features = {
        "Slope": grid(slope),
        "MAP": grid(map_field),
        "NEE": grid(nee),
        "Asp": grid(aspect),
        "Elev": grid(elev),
    }
    target = grid(target_vals)
    ds = dataset_from_rasters(features, target)
    rasters = dict(features)
    rasters["Area"] = grid(_flow_accumulation(elev, cellsize))
    return rasters, target, ds
