"""Tabular/raster data handling, spatial partitioning, and standardization.

A :class:`Dataset` holds raw feature columns, a binary target, optional grid
positions (for rasters), and a train/test partition tag per sample. Raster
I/O follows the plain-text ESRI ASCII grid convention (NCOLS/NROWS header,
row-major values from the top row down).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._util import fmt_float, rng_for
from .errors import DataError

__all__ = [
    "Dataset",
    "Standardizer",
    "RasterGrid",
    "load_csv",
    "save_csv",
    "checkerboard_split",
    "cv_subsample",
    "class_weights",
    "weight_vector",
    "read_esri_ascii",
    "write_esri_ascii",
    "dataset_from_rasters",
    "values_to_raster",
]

NODATA_DEFAULT = -9999.0


@dataclass(frozen=True)
class Dataset:
    """Samples for binary susceptibility modeling.

    Parameters
    ----------
    feature_names : tuple of str
        Column names, in column order of ``X``.
    X : ndarray, shape (n, d)
        Raw (unstandardized) feature values; must be finite.
    y : ndarray, shape (n,)
        Binary target in {0, 1}; both classes must be present.
    grid_pos : ndarray of int, shape (n, 2), optional
        (row, col) cell position per sample for raster-derived data.
    partition : ndarray of str, shape (n,)
        Per-sample tag, either ``"train"`` or ``"test"``.
    """

    feature_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    grid_pos: np.ndarray | None = None
    partition: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {X.shape}")
        n, d = X.shape
        if len(self.feature_names) != d:
            raise DataError(
                f"{len(self.feature_names)} feature names for {d} feature columns"
            )
        if len(set(self.feature_names)) != d:
            raise DataError("feature names must be unique")
        if y.shape != (n,):
            raise DataError(f"target shape {y.shape} does not match {n} samples")
        if not np.all(np.isfinite(X)):
            bad = np.argwhere(~np.isfinite(X))[0]
            raise DataError(
                f"non-finite feature value at row {bad[0]}, "
                f"column {self.feature_names[bad[1]]!r}"
            )
        if not np.all(np.isin(y, (0.0, 1.0))):
            bad = int(np.flatnonzero(~np.isin(y, (0.0, 1.0)))[0])
            raise DataError(f"target must be 0 or 1; row {bad} has {y[bad]!r}")
        if not (np.any(y == 0.0) and np.any(y == 1.0)):
            raise DataError("target must contain both classes (0 and 1)")
        if self.grid_pos is not None:
            gp = np.asarray(self.grid_pos, dtype=int)
            object.__setattr__(self, "grid_pos", gp)
            if gp.shape != (n, 2):
                raise DataError(f"grid_pos shape {gp.shape}, expected ({n}, 2)")
            if np.any(gp < 0):
                bad = int(np.flatnonzero((gp < 0).any(axis=1))[0])
                raise DataError(f"negative grid position at row {bad}")
        if self.partition is None:
            object.__setattr__(self, "partition", np.full(n, "train", dtype="<U5"))
        else:
            part = np.asarray(self.partition, dtype="<U5")
            object.__setattr__(self, "partition", part)
            if part.shape != (n,):
                raise DataError(f"partition shape {part.shape}, expected ({n},)")
            bad_tags = set(np.unique(part)) - {"train", "test"}
            if bad_tags:
                raise DataError(f"partition tags must be train/test, got {bad_tags}")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def train_indices(self) -> np.ndarray:
        return np.flatnonzero(self.partition == "train")

    def test_indices(self) -> np.ndarray:
        return np.flatnonzero(self.partition == "test")

    def with_partition(self, partition: np.ndarray) -> "Dataset":
        return replace(self, partition=partition)


@dataclass(frozen=True)
class Standardizer:
    """Column-wise zero-mean / unit-variance transform fitted on given rows."""

    names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    @staticmethod
    def fit(X: np.ndarray, names: Sequence[str] | None = None) -> "Standardizer":
        """Fit means and (population) standard deviations column-wise.

        Raises
        ------
        DataError
            If any column has zero variance; the message names the columns.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if names is None:
            names = tuple(f"x{i + 1}" for i in range(X.shape[1]))
        names = tuple(names)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        dead = [names[j] for j in np.flatnonzero(std == 0.0)]
        if dead:
            raise DataError(
                "zero-variance feature(s) cannot be standardized: " + ", ".join(dead)
            )
        return Standardizer(names=names, mean=mean, std=std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return (X - self.mean) / self.std

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return Z * self.std + self.mean

    def as_dict(self) -> dict:
        return {
            "names": list(self.names),
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
        }

    @staticmethod
    def from_dict(d: Mapping) -> "Standardizer":
        return Standardizer(
            names=tuple(d["names"]),
            mean=np.asarray(d["mean"], dtype=float),
            std=np.asarray(d["std"], dtype=float),
        )


def load_csv(path: str | Path) -> Dataset:
    """Load a sample table from CSV.

    The file must have a header row including a ``target`` column (binary
    0/1). Optional integer ``row`` and ``col`` columns become grid positions,
    and an optional ``partition`` column (train/test) is honored. Every
    other column is a feature, kept in header order. Parse errors name the
    offending row number (1-based, counting the header as row 1) and column.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if "target" not in header:
            raise DataError(f"{path}: missing required column 'target'")
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column names in header")
        has_grid = "row" in header and "col" in header
        has_part = "partition" in header
        special = {"target"} | ({"row", "col"} if has_grid else set())
        if has_part:
            special |= {"partition"}
        feature_cols = [h for h in header if h not in special]
        if not feature_cols:
            raise DataError(f"{path}: no feature columns besides {sorted(special)}")
        col_of = {h: i for i, h in enumerate(header)}

        rows_X: list[list[float]] = []
        rows_y: list[float] = []
        rows_gp: list[tuple[int, int]] = []
        rows_part: list[str] = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise DataError(
                    f"{path}: row {lineno} has {len(rec)} fields, expected {len(header)}"
                )

            def cell(name: str) -> str:
                return rec[col_of[name]].strip()

            try:
                rows_y.append(float(cell("target")))
            except ValueError:
                raise DataError(
                    f"{path}: row {lineno}, column 'target': "
                    f"cannot parse {cell('target')!r} as a number"
                ) from None
            vals = []
            for name in feature_cols:
                try:
                    vals.append(float(cell(name)))
                except ValueError:
                    raise DataError(
                        f"{path}: row {lineno}, column {name!r}: "
                        f"cannot parse {cell(name)!r} as a number"
                    ) from None
            rows_X.append(vals)
            if has_grid:
                try:
                    rows_gp.append((int(cell("row")), int(cell("col"))))
                except ValueError:
                    raise DataError(
                        f"{path}: row {lineno}: grid position must be integer, "
                        f"got row={cell('row')!r} col={cell('col')!r}"
                    ) from None
            if has_part:
                tag = cell("partition")
                if tag not in ("train", "test"):
                    raise DataError(
                        f"{path}: row {lineno}: partition must be train or "
                        f"test, got {tag!r}"
                    )
                rows_part.append(tag)
    if not rows_X:
        raise DataError(f"{path}: no data rows")
    return Dataset(
        feature_names=tuple(feature_cols),
        X=np.asarray(rows_X, dtype=float),
        y=np.asarray(rows_y, dtype=float),
        grid_pos=np.asarray(rows_gp, dtype=int) if has_grid else None,
        partition=np.asarray(rows_part, dtype="<U5") if has_part else None,
    )


def save_csv(ds: Dataset, path: str | Path, *, include_partition: bool = False) -> None:
    """Write a dataset back to CSV (features, target, optional grid/partition)."""
    path = Path(path)
    header = list(ds.feature_names) + ["target"]
    if ds.grid_pos is not None:
        header += ["row", "col"]
    if include_partition:
        header += ["partition"]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(ds.n_samples):
            rec = [fmt_float(v) for v in ds.X[i]] + [str(int(ds.y[i]))]
            if ds.grid_pos is not None:
                rec += [str(int(ds.grid_pos[i, 0])), str(int(ds.grid_pos[i, 1]))]
            if include_partition:
                rec += [str(ds.partition[i])]
            w.writerow(rec)


def checkerboard_split(
    ds: Dataset,
    train_fraction: float = 0.7,
    block: int = 16,
    seed: int = 0,
) -> Dataset:
    """Partition samples into train/test by spatial blocks.

    Cells are grouped into square tiles of ``block`` x ``block`` grid cells
    (or, without grid positions, into blocks of ``block`` consecutive row
    indices). Tiles are ranked row-major and assigned through a repeating
    10-tile cycle: ``ceil(10 * train_fraction)`` of every 10 consecutive
    ranks are train, the rest test, with a seed-derived cyclic offset. This
    yields a deterministic checkerboard whose realized train fraction tracks
    the target; a deviation above 0.05 triggers a warning, and a split that
    leaves either side empty raises a "partition degenerate" error (e.g. a
    block size larger than the whole grid).
    """
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if block < 1:
        raise DataError(f"block must be >= 1, got {block}")
    k = math.ceil(10.0 * train_fraction)
    offset = int(rng_for(seed, "checkerboard").integers(0, 10))
    if ds.grid_pos is not None:
        tile_r = ds.grid_pos[:, 0] // block
        tile_c = ds.grid_pos[:, 1] // block
        n_tile_cols = int(tile_c.max()) + 1
        rank = tile_r * n_tile_cols + tile_c
    else:
        rank = np.arange(ds.n_samples) // block
    is_train = ((rank + offset) % 10) < k
    if bool(is_train.all()) or not bool(is_train.any()):
        raise DataError(
            "partition degenerate: all samples fell on one side of the split "
            f"(block={block} leaves {len(np.unique(rank))} tile(s)); "
            "reduce the block size"
        )
    realized = float(is_train.mean())
    if abs(realized - train_fraction) > 0.05:
        warnings.warn(
            f"checkerboard split realized train fraction {realized:.3f} deviates "
            f"from target {train_fraction:.3f} by more than 0.05",
            stacklevel=2,
        )
    partition = np.where(is_train, "train", "test").astype("<U5")
    return ds.with_partition(partition)


def cv_subsample(ds: Dataset, trial: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic 50% subsample of the train and of the test partition.

    Returns sorted index arrays ``(train_idx, test_idx)``; the draw depends
    only on ``(seed, trial)``.
    """
    rng = rng_for(seed, "cv_subsample", trial)
    out = []
    for pool in (ds.train_indices(), ds.test_indices()):
        if pool.size < 2:
            raise DataError(
                "cv_subsample needs at least 2 samples in each partition, "
                f"got {pool.size}"
            )
        take = pool.size // 2
        out.append(np.sort(rng.choice(pool, size=take, replace=False)))
    return out[0], out[1]


def class_weights(ds: Dataset) -> tuple[float, float]:
    """Per-class fit weights from the train partition: (w_neg, w_pos).

    Negatives weigh 1; positives weigh N_neg/N_pos, so both classes carry
    equal total weight regardless of prevalence.
    """
    tr = ds.train_indices()
    y = ds.y[tr]
    n_pos = int(np.sum(y == 1.0))
    n_neg = int(np.sum(y == 0.0))
    if n_pos == 0 or n_neg == 0:
        raise DataError("train partition must contain both classes")
    return 1.0, n_neg / n_pos


def weight_vector(y: np.ndarray, w_neg: float, w_pos: float) -> np.ndarray:
    """Expand class weights to a per-sample weight vector for labels ``y``."""
    y = np.asarray(y, dtype=float)
    return np.where(y == 1.0, w_pos, w_neg)


# ---------------------------------------------------------------------------
# ESRI ASCII raster I/O


@dataclass(frozen=True)
class RasterGrid:
    """A single-band raster on a regular grid.

    ``values`` has shape (nrows, ncols) with row 0 the northernmost row, as
    in the ASCII grid file layout. ``nodata`` marks missing cells.
    """

    values: np.ndarray
    xllcorner: float = 0.0
    yllcorner: float = 0.0
    cellsize: float = 1.0
    nodata: float = NODATA_DEFAULT

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2:
            raise DataError(f"raster values must be 2-D, got shape {vals.shape}")
        if self.cellsize <= 0:
            raise DataError(f"cellsize must be positive, got {self.cellsize}")

    @property
    def nrows(self) -> int:
        return self.values.shape[0]

    @property
    def ncols(self) -> int:
        return self.values.shape[1]

    def mask(self) -> np.ndarray:
        """Boolean mask of valid (non-nodata, finite) cells."""
        return np.isfinite(self.values) & (self.values != self.nodata)

    def same_geometry(self, other: "RasterGrid", tol: float = 1e-9) -> bool:
        return (
            self.nrows == other.nrows
            and self.ncols == other.ncols
            and abs(self.xllcorner - other.xllcorner) <= tol
            and abs(self.yllcorner - other.yllcorner) <= tol
            and abs(self.cellsize - other.cellsize) <= tol
        )


def read_esri_ascii(path: str | Path) -> RasterGrid:
    """Read a plain-text ESRI ASCII grid.

    Header keywords (case-insensitive): ncols, nrows, xllcorner, yllcorner,
    cellsize, and optional nodata_value (default -9999). Values follow
    row-major, top row first.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    header: dict[str, float] = {}
    tokens: list[str] = []
    with path.open() as fh:
        lines = fh.read().split("\n")
    i = 0
    while i < len(lines):
        parts = lines[i].split()
        if len(parts) == 2 and parts[0].lower() in {
            "ncols", "nrows", "xllcorner", "yllcorner", "cellsize",
            "nodata_value", "xllcenter", "yllcenter",
        }:
            try:
                header[parts[0].lower()] = float(parts[1])
            except ValueError:
                raise DataError(
                    f"{path}: header line {i + 1}: cannot parse {parts[1]!r}"
                ) from None
            i += 1
        else:
            break
    for key in ("ncols", "nrows", "cellsize"):
        if key not in header:
            raise DataError(f"{path}: missing header keyword {key!r}")
    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    cellsize = float(header["cellsize"])
    nodata = float(header.get("nodata_value", NODATA_DEFAULT))
    # center-referenced origins are converted to corner convention
    if "xllcenter" in header:
        xll = float(header["xllcenter"]) - cellsize / 2.0
    else:
        xll = float(header.get("xllcorner", 0.0))
    if "yllcenter" in header:
        yll = float(header["yllcenter"]) - cellsize / 2.0
    else:
        yll = float(header.get("yllcorner", 0.0))
    for line in lines[i:]:
        tokens.extend(line.split())
    if len(tokens) != nrows * ncols:
        raise DataError(
            f"{path}: expected {nrows * ncols} values "
            f"({nrows} rows x {ncols} cols), found {len(tokens)}"
        )
    try:
        vals = np.asarray([float(t) for t in tokens], dtype=float)
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric raster value: {exc}") from None
    return RasterGrid(
        values=vals.reshape(nrows, ncols),
        xllcorner=xll,
        yllcorner=yll,
        cellsize=cellsize,
        nodata=nodata,
    )


def write_esri_ascii(grid: RasterGrid, path: str | Path) -> None:
    """Write a raster as a plain-text ESRI ASCII grid (17-digit floats)."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"NCOLS {grid.ncols}\n")
        fh.write(f"NROWS {grid.nrows}\n")
        fh.write(f"XLLCORNER {fmt_float(grid.xllcorner)}\n")
        fh.write(f"YLLCORNER {fmt_float(grid.yllcorner)}\n")
        fh.write(f"CELLSIZE {fmt_float(grid.cellsize)}\n")
        fh.write(f"NODATA_VALUE {fmt_float(grid.nodata)}\n")
        for r in range(grid.nrows):
            fh.write(" ".join(fmt_float(v) for v in grid.values[r]))
            fh.write("\n")


def dataset_from_rasters(
    features: Mapping[str, RasterGrid],
    target: RasterGrid,
) -> Dataset:
    """Assemble a dataset from co-registered feature rasters and a 0/1 target.

    Cells where any feature or the target is nodata are dropped. Grid
    positions record each sample's (row, col).
    """
    if not features:
        raise DataError("need at least one feature raster")
    names = tuple(features.keys())
    first = features[names[0]]
    for name, grid in features.items():
        if not grid.same_geometry(first):
            raise DataError(f"raster {name!r} geometry differs from {names[0]!r}")
    if not target.same_geometry(first):
        raise DataError("target raster geometry differs from feature rasters")
    valid = target.mask()
    for grid in features.values():
        valid &= grid.mask()
    if not valid.any():
        raise DataError("no cells where all rasters have data")
    rr, cc = np.nonzero(valid)
    X = np.column_stack([features[name].values[rr, cc] for name in names])
    y = target.values[rr, cc]
    return Dataset(
        feature_names=names,
        X=X,
        y=y,
        grid_pos=np.column_stack([rr, cc]),
    )


def values_to_raster(
    template: RasterGrid,
    grid_pos: np.ndarray,
    values: np.ndarray,
    nodata: float = NODATA_DEFAULT,
) -> RasterGrid:
    """Paint per-sample values back onto a raster matching ``template``."""
    grid_pos = np.asarray(grid_pos, dtype=int)
    values = np.asarray(values, dtype=float)
    if grid_pos.shape[0] != values.shape[0]:
        raise DataError(
            f"{values.shape[0]} values for {grid_pos.shape[0]} grid positions"
        )
    out = np.full((template.nrows, template.ncols), nodata, dtype=float)
    if grid_pos.size and (
        grid_pos[:, 0].max() >= template.nrows or grid_pos[:, 1].max() >= template.ncols
    ):
        raise DataError("grid positions fall outside the template raster")
    out[grid_pos[:, 0], grid_pos[:, 1]] = values
    return RasterGrid(
        values=out,
        xllcorner=template.xllcorner,
        yllcorner=template.yllcorner,
        cellsize=template.cellsize,
        nodata=nodata,
    )
