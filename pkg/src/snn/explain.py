"""Explainability products built on the superposition property.

Because the total score is an exact sum of per-feature terms, each subnet
can be read directly: as a response curve over its composite's observed
range (with a likelihood-ratio overlay tying the learned shape to the
empirical class evidence), and as windowed mean-contribution differences
between landslide and non-landslide cells that name the locally dominant
control.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .baselines import LogRModel, _lr_bins
from .dataset import Dataset, RasterGrid
from .errors import DataError, UsageError
from .monomials import Monomial, evaluate_matrix
from .rbf import SnnModel, subnet_eval

__all__ = [
    "ContributionCurve",
    "contribution_curve",
    "WindowReport",
    "DeltaSbarMap",
    "delta_sbar_map",
    "normalized_deltas",
    "climate_vs_slope_map",
]


# ---------------------------------------------------------------------------
# per-feature response curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContributionCurve:
    """One subnet's response sampled over its composite's empirical range.

    ``z`` holds raw composite values (strictly increasing), ``s`` the subnet
    output at each sample, ``lr`` the likelihood ratio of the bin each
    sample falls in, and ``s_at_lr_one`` the subnet level where the overlay
    first crosses LR = 1 (None when it never does).
    """

    feature: Monomial
    label: str
    z: np.ndarray
    s: np.ndarray
    lr: np.ndarray
    lr_edges: np.ndarray
    lr_by_bin: np.ndarray
    s_at_lr_one: float | None


def contribution_curve(model: SnnModel, feature: str, ds: Dataset,
                       n_samples: int = 200) -> ContributionCurve:
    """Sample one subnet over the [p0.5, p99.5] range of its composite.

    The range is clipped to those percentiles of the dataset's composite
    values so extrapolated Gaussian tails cannot dominate the picture. The
    overlay bins the same composite against the labels; the LR = 1 reference
    level is located by inverse interpolation (leftmost crossing).
    """
    if n_samples < 2:
        raise UsageError(f"n_samples must be >= 2, got {n_samples}")
    if feature not in model.labels:
        raise DataError(f"model has no subnet labeled {feature!r}")
    sub = model.subnets[model.labels.index(feature)]
    if model.composite_convention == "raw-product-then-standardize":
        z_all = evaluate_matrix([sub.monomial], ds.X)[:, 0]
    else:
        z_all = evaluate_matrix(
            [sub.monomial], model.original_standardizer.transform(ds.X)
        )[:, 0]
    lo = float(np.percentile(z_all, 0.5))
    hi = float(np.percentile(z_all, 99.5))
    if not hi > lo:
        raise DataError(
            f"composite {feature!r} is constant over the dataset; no curve"
        )
    z = np.linspace(lo, hi, n_samples)
    s = subnet_eval(sub.params, (z - sub.chi_mean) / sub.chi_std)

    edges, lr_by_bin = _lr_bins(z_all, ds.y.astype(float), bins=10)
    lr = lr_by_bin[np.searchsorted(edges, z, side="right")]
    s_ref = _level_at_lr_one(z, s, lr)
    return ContributionCurve(
        feature=sub.monomial,
        label=sub.label,
        z=z,
        s=s,
        lr=lr,
        lr_edges=edges,
        lr_by_bin=lr_by_bin,
        s_at_lr_one=s_ref,
    )


def _level_at_lr_one(z: np.ndarray, s: np.ndarray,
                     lr: np.ndarray) -> float | None:
    """Subnet level at the leftmost point where the LR overlay crosses 1."""
    d = lr - 1.0
    hits = np.nonzero(d == 0.0)[0]
    crossings = np.nonzero(d[:-1] * d[1:] < 0)[0]
    first_hit = hits[0] if hits.size else None
    first_cross = crossings[0] if crossings.size else None
    if first_hit is not None and (first_cross is None or first_hit <= first_cross):
        return float(s[first_hit])
    if first_cross is None:
        return None
    i = int(first_cross)
    t = d[i] / (d[i] - d[i + 1])
    return float(s[i] + t * (s[i + 1] - s[i]))


# ---------------------------------------------------------------------------
# windowed contribution differences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowReport:
    """Mean-contribution differences inside one spatial window.

    ``delta[j]`` is the mean contribution of subnet j over landslide cells
    minus its mean over non-landslide cells; ``dominant`` is the label
    attaining the largest difference. Only windows holding both classes are
    reported.
    """

    window: tuple[int, int]
    extent: tuple[int, int, int, int]
    n_ld: int
    n_nld: int
    delta: tuple[float, ...]
    labels: tuple[str, ...]

    @property
    def dominant(self) -> str:
        return self.labels[int(np.argmax(self.delta))]


@dataclass(frozen=True)
class DeltaSbarMap:
    """All window reports plus the dominant-control raster and its legend."""

    reports: tuple[WindowReport, ...]
    dominant_raster: RasterGrid
    legend: tuple[tuple[int, str], ...]


def _ld_mask(model: SnnModel | None, ds: Dataset, ld_source: str,
             threshold: float | None) -> np.ndarray:
    if ld_source == "mapped":
        return ds.y == 1
    if ld_source == "modeled":
        if threshold is None:
            raise UsageError("ld_source='modeled' requires a threshold")
        if model is None:
            raise UsageError("ld_source='modeled' requires a model")
        return model.predict(ds.X) >= threshold
    raise UsageError(
        f"ld_source must be 'mapped' or 'modeled', got {ld_source!r}"
    )


def delta_sbar_map(model: SnnModel, ds: Dataset, window_cells: int = 50,
                   ld_source: str = "mapped", threshold: float | None = None,
                   geometry: RasterGrid | None = None) -> DeltaSbarMap:
    """Windowed per-feature contribution differences and the dominant map.

    The grid is tiled into ``window_cells`` × ``window_cells`` windows. In
    each window holding at least one landslide (per ``ld_source``) and one
    non-landslide cell, every subnet's mean contribution over the two groups
    is differenced; the feature with the largest difference is painted over
    the window in the dominant-control raster (indices per the legend).
    Windows lacking either class are NODATA.
    """
    if window_cells < 1:
        raise UsageError(f"window_cells must be >= 1, got {window_cells}")
    if ds.grid_pos is None:
        raise DataError("dataset has no grid positions; cannot window")
    ld = _ld_mask(model, ds, ld_source, threshold)
    contrib = model.contributions(ds.X)
    labels = model.labels

    rows = ds.grid_pos[:, 0]
    cols = ds.grid_pos[:, 1]
    if geometry is not None:
        nrows, ncols = geometry.nrows, geometry.ncols
        xll, yll, cell, nodata = (geometry.xllcorner, geometry.yllcorner,
                                  geometry.cellsize, geometry.nodata)
    else:
        nrows, ncols = int(rows.max()) + 1, int(cols.max()) + 1
        xll, yll, cell, nodata = 0.0, 0.0, 1.0, -9999.0

    wr = rows // window_cells
    wc = cols // window_cells
    wid = wr * ((ncols // window_cells) + 1) + wc
    out = np.full((nrows, ncols), nodata, dtype=float)
    reports: list[WindowReport] = []
    for w in np.unique(wid):
        in_w = wid == w
        ld_w = in_w & ld
        nld_w = in_w & ~ld
        if not ld_w.any() or not nld_w.any():
            continue
        delta = contrib[ld_w].mean(axis=0) - contrib[nld_w].mean(axis=0)
        r0, r1 = int(rows[in_w].min()), int(rows[in_w].max())
        c0, c1 = int(cols[in_w].min()), int(cols[in_w].max())
        rep = WindowReport(
            window=(int(wr[in_w][0]), int(wc[in_w][0])),
            extent=(r0, r1, c0, c1),
            n_ld=int(ld_w.sum()),
            n_nld=int(nld_w.sum()),
            delta=tuple(float(v) for v in delta),
            labels=labels,
        )
        reports.append(rep)
        out[rows[in_w], cols[in_w]] = float(np.argmax(delta))
    raster = RasterGrid(out, xll, yll, cell, nodata)
    legend = tuple((j, lab) for j, lab in enumerate(labels))
    return DeltaSbarMap(reports=tuple(reports), dominant_raster=raster,
                        legend=legend)


# ---------------------------------------------------------------------------
# normalized differences
# ---------------------------------------------------------------------------


def normalized_deltas(model: SnnModel | LogRModel, ds: Dataset,
                      threshold: float) -> tuple[tuple[str, float, float], ...]:
    """Class-mean contribution differences, normalized by the threshold.

    For a subnet model each feature's mean contribution over landslide cells
    minus non-landslide cells is divided by the decision threshold on the
    total score. For a logistic model the per-feature linear terms are
    differenced the same way and divided by the adjusted threshold
    t_a = logit(t) − b₀. Rows are (label, raw delta, normalized delta),
    sorted by normalized delta descending.
    """
    ld = ds.y == 1
    if not ld.any() or ld.all():
        raise DataError("normalized deltas need both classes present")
    if isinstance(model, LogRModel):
        if not 0.0 < threshold < 1.0:
            raise UsageError(
                f"probability threshold must lie strictly inside (0, 1), "
                f"got {threshold}"
            )
        t_a = float(np.log(threshold / (1.0 - threshold)) - model.intercept)
        if t_a == 0.0:
            raise UsageError("adjusted threshold t_a is zero; cannot normalize")
        cols = np.stack(
            [ds.X[:, ds.feature_names.index(n)] for n in model.feature_names],
            axis=1,
        )
        terms = model.standardizer.transform(cols) * model.coef
        labels = model.feature_names
        denom = t_a
    else:
        if threshold == 0.0:
            raise UsageError("score threshold is zero; cannot normalize")
        terms = model.contributions(ds.X)
        labels = model.labels
        denom = float(threshold)
    delta = terms[ld].mean(axis=0) - terms[~ld].mean(axis=0)
    rows = [
        (labels[j], float(delta[j]), float(delta[j] / denom))
        for j in range(len(labels))
    ]
    rows.sort(key=lambda r: -r[2])
    return tuple(rows)


# ---------------------------------------------------------------------------
# climate-versus-slope ratio map
# ---------------------------------------------------------------------------


def climate_vs_slope_map(
    model: SnnModel,
    ds: Dataset,
    window_cells: int = 50,
    climate_features: Sequence[str] = ("Asp", "NEE", "MAP"),
    slope_feature: str = "Slope",
    geometry: RasterGrid | None = None,
) -> RasterGrid:
    """Windowed |ΔS̄_climate| / |ΔS̄_Slope| ratio raster.

    Per window, the climate subnets' mean-contribution differences are
    summed and their magnitude divided by the slope subnet's. Values above
    1 mark windows where the climate features together outweigh slope.
    Windows lacking landslide or non-landslide cells are NODATA; windows
    where the slope difference is exactly zero are NODATA and counted in a
    warning.
    """
    for name in (*climate_features, slope_feature):
        if name not in model.labels:
            raise DataError(f"model has no subnet labeled {name!r}")
    dmap = delta_sbar_map(model, ds, window_cells=window_cells,
                          ld_source="mapped", geometry=geometry)
    climate_idx = [model.labels.index(n) for n in climate_features]
    slope_idx = model.labels.index(slope_feature)

    raster = dmap.dominant_raster
    out = np.full_like(raster.values, raster.nodata)
    rows = ds.grid_pos[:, 0]
    cols = ds.grid_pos[:, 1]
    wr = rows // window_cells
    wc = cols // window_cells
    zero_slope = 0
    for rep in dmap.reports:
        num = abs(sum(rep.delta[j] for j in climate_idx))
        den = abs(rep.delta[slope_idx])
        in_w = (wr == rep.window[0]) & (wc == rep.window[1])
        if den == 0.0:
            zero_slope += 1
            continue
        out[rows[in_w], cols[in_w]] = num / den
    if zero_slope:
        warnings.warn(
            f"{zero_slope} window(s) had zero slope contribution difference "
            "and were left as NODATA",
            stacklevel=2,
        )
    return RasterGrid(out, raster.xllcorner, raster.yllcorner,
                      raster.cellsize, raster.nodata)
