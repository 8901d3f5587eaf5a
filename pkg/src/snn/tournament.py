"""Point-based composite-feature ranking and forward selection.

Many random groups of candidate features are drawn; each group trains one
small additive RBF model (class-weighted, damped least squares) and plays a
backwards-elimination round: the model is refit after every drop, and the
feature whose fitted subnet moves the prediction least over held-out
validation rows (smallest contribution range, max minus min) is dropped
until one survivor remains. The survivor earns its group's point. Ranking
by accumulated points rewards features that keep earning large, stable
contributions in whatever company they are drawn with, which is exactly the
property the final additive model needs.

Forward selection then walks the ranking and keeps a feature only when
adding it lifts the validation AUROC of an incrementally (re)fitted
additive model by more than ``forward_tol``, stopping after three
consecutive rejections; the top-ranked feature is always kept.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ._additive import fit_additive
from ._util import parallel_map, rng_for, stable_seed
from .dataset import Dataset, class_weights, weight_vector
from .errors import DataError, NumericalError, UsageError
from .lm import LmConfig
from .metrics import auroc
from .monomials import CompositeDesign, Monomial, composite_design

__all__ = [
    "TournamentConfig",
    "RankEntry",
    "Ranking",
    "run_tournament",
    "backwards_eliminate",
    "forward_select",
    "SelectionStep",
    "Selection",
]


@dataclass(frozen=True)
class TournamentConfig:
    """Tournament and forward-selection settings.

    ``net_width`` is the total Gaussian budget of one group model, shared
    evenly across the group's features (at least one unit each), so the
    per-feature capacity grows as elimination shrinks the group.
    """

    group_size: int = 8
    n_groups: int = 2000
    net_width: int = 16
    epochs: int = 50
    forward_tol: float = 0.002
    val_fraction: float = 0.25
    forward_v: int = 6
    forward_patience: int = 3
    max_failed_fraction: float = 0.10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.group_size < 2:
            raise UsageError(f"group_size must be >= 2, got {self.group_size}")
        if self.n_groups < 1:
            raise UsageError(f"n_groups must be >= 1, got {self.n_groups}")
        if self.net_width < 1:
            raise UsageError(f"net_width must be >= 1, got {self.net_width}")
        if self.forward_tol < 0:
            raise UsageError(f"forward_tol must be >= 0, got {self.forward_tol}")
        if not 0.0 < self.val_fraction < 1.0:
            raise UsageError(
                f"val_fraction must be in (0, 1), got {self.val_fraction}"
            )


@dataclass(frozen=True)
class RankEntry:
    monomial: Monomial
    label: str
    points: int
    level: int


@dataclass(frozen=True)
class Ranking:
    """Candidates sorted by (points desc, level asc, label asc)."""

    entries: tuple[RankEntry, ...]
    completed_groups: int
    failed_groups: int

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(e.label for e in self.entries)

    @property
    def points(self) -> dict[str, int]:
        return {e.label: e.points for e in self.entries}

    def total_points(self) -> int:
        return sum(e.points for e in self.entries)


def _holdout_split(
    n_rows: int, val_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded (fit, validation) row split, shared by ranking and selection."""
    perm = rng_for(seed, "tournament-holdout").permutation(n_rows)
    n_val = max(1, int(round(n_rows * val_fraction)))
    if n_val >= n_rows:
        raise DataError(
            f"holdout of {n_val} rows leaves no fitting rows (n={n_rows})"
        )
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def _canonical_order(candidates: Sequence[Monomial]) -> list[int]:
    """Indices of ``candidates`` in canonical (level, graded-lex) order."""
    n_basis = max(m.max_index for m in candidates) + 1
    keys = [(m.level, tuple(-e for e in m.dense(n_basis))) for m in candidates]
    return sorted(range(len(candidates)), key=lambda i: keys[i])


def backwards_eliminate(
    chi_fit: np.ndarray,
    y_fit: np.ndarray,
    w_fit: np.ndarray,
    chi_val: np.ndarray,
    members: Sequence[int],
    cfg: TournamentConfig,
    group_seed: int,
    tags: Sequence[str] | None = None,
) -> int:
    """One group's elimination round; returns the surviving member.

    ``members`` are canonical candidate positions selecting columns of the
    chi matrices. After each joint fit, the member whose subnet spans the
    smallest output range over the validation rows is dropped (ties drop
    the higher-index member) and the remainder is refit; a group of one
    needs no training.
    """
    feats = list(members)
    if tags is None:
        tags = [f"c{j}" for j in range(chi_fit.shape[1])]
    while len(feats) > 1:
        v = max(1, cfg.net_width // len(feats))
        fit = fit_additive(
            chi_fit[:, feats],
            y_fit,
            v=v,
            weights=w_fit,
            seed=stable_seed(group_seed, "stage", len(feats)),
            tags=tuple(tags[j] for j in feats),
            config=LmConfig(max_epochs=cfg.epochs),
        )
        contrib = fit.contributions(chi_val[:, feats])
        ranges = contrib.max(axis=0) - contrib.min(axis=0)
        weakest = ranges.min()
        tied = [j for j in range(len(feats)) if ranges[j] == weakest]
        drop = max(tied, key=lambda j: feats[j])
        feats.pop(drop)
    return feats[0]


# Worker context shared by fork/spawn via the pool initializer.
_CTX: dict = {}


def _init_group_ctx(ctx: dict) -> None:
    global _CTX
    _CTX = ctx


def _run_group(g: int) -> tuple[int, int]:
    """Run group ``g`` against the module context; (-1) marks a failure."""
    ctx = _CTX
    cfg: TournamentConfig = ctx["cfg"]
    m = ctx["n_candidates"]
    rng = rng_for(cfg.seed, "tournament-group", g)
    members = np.sort(rng.choice(m, size=min(cfg.group_size, m), replace=False))
    try:
        survivor = backwards_eliminate(
            ctx["chi_fit"],
            ctx["y_fit"],
            ctx["w_fit"],
            ctx["chi_val"],
            [int(j) for j in members],
            cfg,
            group_seed=stable_seed(cfg.seed, "tournament-group", g),
            tags=ctx["tags"],
        )
        return g, survivor
    except (NumericalError, DataError):
        return g, -1


def run_tournament(
    candidates: Sequence[Monomial],
    ds: Dataset,
    cfg: TournamentConfig | None = None,
    design: CompositeDesign | None = None,
    threads: int | None = None,
) -> Ranking:
    """Rank candidate composites by tournament points.

    Groups are drawn over the *canonical* candidate order (level, then
    graded-lexicographic), so the ranking is invariant to permutations of
    the input list. Per-group randomness is keyed by (seed, group index),
    making results independent of worker scheduling. A failed group (its
    model fit degenerated) is logged and skipped; more than
    ``max_failed_fraction`` failures aborts the run.
    """
    cfg = cfg or TournamentConfig()
    candidates = list(candidates)
    if len(set(candidates)) != len(candidates):
        raise DataError("candidate list contains duplicates")
    if len(candidates) < cfg.group_size:
        raise UsageError(
            f"{len(candidates)} candidates but group_size={cfg.group_size}"
        )
    if design is None:
        design = composite_design(candidates, ds)
    order = _canonical_order(candidates)
    canon_monos = tuple(candidates[i] for i in order)
    canon_labels = tuple(design.labels[i] for i in order)
    tr = ds.train_indices()
    y_tr = ds.y[tr]
    if np.unique(y_tr).size < 2:
        raise DataError("train partition is single-class")
    chi_tr = design.chi[tr][:, order]
    w_neg, w_pos = class_weights(ds)
    fit_rows, val_rows = _holdout_split(tr.size, cfg.val_fraction, cfg.seed)
    ctx = {
        "cfg": cfg,
        "n_candidates": len(candidates),
        "chi_fit": chi_tr[fit_rows],
        "y_fit": y_tr[fit_rows],
        "w_fit": weight_vector(y_tr[fit_rows], w_neg, w_pos),
        "chi_val": chi_tr[val_rows],
        "tags": canon_labels,
    }
    results = parallel_map(
        _run_group,
        range(cfg.n_groups),
        threads=threads,
        initializer=_init_group_ctx,
        initargs=(ctx,),
    )
    points = np.zeros(len(candidates), dtype=int)
    failed = 0
    for _, survivor in results:
        if survivor < 0:
            failed += 1
        else:
            points[survivor] += 1
    if failed > cfg.max_failed_fraction * cfg.n_groups:
        raise NumericalError(
            f"{failed} of {cfg.n_groups} tournament groups failed to train "
            f"(> {cfg.max_failed_fraction:.0%}); the data or configuration is "
            "degenerate"
        )
    if failed:
        warnings.warn(
            f"{failed} of {cfg.n_groups} tournament groups failed and were "
            "skipped",
            stacklevel=2,
        )
    entries = [
        RankEntry(
            monomial=canon_monos[i],
            label=canon_labels[i],
            points=int(points[i]),
            level=canon_monos[i].level,
        )
        for i in range(len(candidates))
    ]
    entries.sort(key=lambda e: (-e.points, e.level, e.label))
    return Ranking(
        entries=tuple(entries),
        completed_groups=cfg.n_groups - failed,
        failed_groups=failed,
    )


@dataclass(frozen=True)
class SelectionStep:
    label: str
    val_auroc: float
    accepted: bool


@dataclass(frozen=True)
class Selection:
    """Forward-selection outcome, in ranking (acceptance) order."""

    monomials: tuple[Monomial, ...]
    labels: tuple[str, ...]
    steps: tuple[SelectionStep, ...]
    val_auroc: float


def forward_select(
    ranking: Ranking,
    ds: Dataset,
    cfg: TournamentConfig | None = None,
    design: CompositeDesign | None = None,
    threads: int | None = None,
) -> Selection:
    """Greedy forward selection over the ranking order.

    The incremental model is the same additive RBF family used everywhere
    else (``forward_v`` Gaussians per feature), refit from scratch — with a
    deterministic seed — for every candidate set, and scored on the shared
    seeded holdout. A candidate is kept iff it improves the validation AUROC
    by more than ``forward_tol``; after ``forward_patience`` consecutive
    rejections the walk stops. The top-ranked feature is always kept.
    """
    cfg = cfg or TournamentConfig()
    if not ranking.entries:
        raise DataError("ranking is empty")
    monos = [e.monomial for e in ranking.entries]
    labels = [e.label for e in ranking.entries]
    if design is None:
        design = composite_design(monos, ds)
        chi_all = design.chi
        col_of = {lab: j for j, lab in enumerate(design.labels)}
    else:
        col_of = {lab: j for j, lab in enumerate(design.labels)}
        missing = [lab for lab in labels if lab not in col_of]
        if missing:
            raise DataError(f"design lacks ranked composites: {missing}")
        chi_all = design.chi
    tr = ds.train_indices()
    y_tr = ds.y[tr]
    chi_tr = chi_all[tr]
    w_neg, w_pos = class_weights(ds)
    fit_rows, val_rows = _holdout_split(tr.size, cfg.val_fraction, cfg.seed)
    w_fit = weight_vector(y_tr[fit_rows], w_neg, w_pos)
    y_val = y_tr[val_rows]
    if np.unique(y_val).size < 2:
        raise DataError("validation holdout is single-class; enlarge it")

    def val_auroc_of(cols: list[int], step: int) -> float:
        fit = fit_additive(
            chi_tr[fit_rows][:, cols],
            y_tr[fit_rows],
            v=cfg.forward_v,
            weights=w_fit,
            seed=stable_seed(cfg.seed, "forward", step),
            tags=tuple(design.labels[c] for c in cols),
            config=LmConfig(max_epochs=cfg.epochs),
        )
        return auroc(fit.predict(chi_tr[val_rows][:, cols]), y_val)

    kept = [0]
    cols = [col_of[labels[0]]]
    best = val_auroc_of(cols, 0)
    steps = [SelectionStep(label=labels[0], val_auroc=best, accepted=True)]
    rejections = 0
    for pos in range(1, len(monos)):
        if rejections >= cfg.forward_patience:
            break
        trial_cols = cols + [col_of[labels[pos]]]
        try:
            a = val_auroc_of(trial_cols, pos)
        except (NumericalError, DataError):
            steps.append(
                SelectionStep(label=labels[pos], val_auroc=float("nan"), accepted=False)
            )
            rejections += 1
            continue
        if a > best + cfg.forward_tol:
            kept.append(pos)
            cols = trial_cols
            best = a
            rejections = 0
            steps.append(SelectionStep(label=labels[pos], val_auroc=a, accepted=True))
        else:
            rejections += 1
            steps.append(SelectionStep(label=labels[pos], val_auroc=a, accepted=False))
    return Selection(
        monomials=tuple(monos[i] for i in kept),
        labels=tuple(labels[i] for i in kept),
        steps=tuple(steps),
        val_auroc=best,
    )
