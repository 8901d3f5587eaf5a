"""Composite-feature generation: primitive monomials over an input basis.

A composite feature is a monomial ``x1^e1 * ... * xn^en`` over the original
features. Only *primitive* monomials are kept: the exponents must have
gcd 1, because a monomial whose exponent vector is an integer multiple of
another's (e.g. ``x1^2*x2^2`` vs ``x1*x2``) is an elementary power transform
of it and adds no new candidate relationship. On idempotent (Boolean 0/1)
domains the stronger *multilinear* rule applies: ``x^k = x`` there, so any
exponent above 1 is likewise derivable and only squarefree monomials are
admitted.

Levels group monomials by total degree; expansion enumerates every admitted
monomial up to a level cap in graded order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, combinations_with_replacement
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, UsageError

__all__ = [
    "Monomial",
    "expand",
    "canonicalize",
    "parse_label",
    "evaluate",
    "evaluate_matrix",
    "CompositeDesign",
    "composite_design",
]

#: Hard cap on expansion size; larger requests are refused outright.
MAX_EXPANSION = 1_000_000


@dataclass(frozen=True, order=True)
class Monomial:
    """A product of basis features raised to positive integer exponents.

    Parameters
    ----------
    exponents : tuple of (int, int)
        Sparse exponent map as sorted ``(feature_index, exponent)`` pairs;
        indices are 0-based, exponents strictly positive, and the exponent
        gcd must be 1 (primitivity).
    """

    exponents: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if not self.exponents:
            raise ValueError("a monomial needs at least one factor")
        idx = [i for i, _ in self.exponents]
        if any(i < 0 for i in idx):
            raise ValueError("feature indices must be non-negative")
        if idx != sorted(set(idx)):
            raise ValueError("exponent map must be sorted with distinct feature indices")
        if any(e <= 0 for _, e in self.exponents):
            raise ValueError("exponents must be strictly positive")
        if math.gcd(*[e for _, e in self.exponents]) != 1:
            root = Monomial.from_map(
                {i: e // math.gcd(*[e2 for _, e2 in self.exponents]) for i, e in self.exponents}
            )
            raise ValueError(
                f"exponents are not primitive; monomial reduces to {root.label()}"
            )

    @staticmethod
    def from_map(exponents: Mapping[int, int]) -> "Monomial":
        """Build from a ``{feature_index: exponent}`` mapping."""
        pairs = tuple(sorted((int(i), int(e)) for i, e in exponents.items() if e != 0))
        return Monomial(pairs)

    @property
    def level(self) -> int:
        """Total degree: the sum of all exponents."""
        return sum(e for _, e in self.exponents)

    @property
    def max_index(self) -> int:
        """Largest basis index used (for bounds checks)."""
        return self.exponents[-1][0]

    def label(self, names: Sequence[str] | None = None) -> str:
        """Human-readable product label, e.g. ``x1^2*x2`` or ``MAP*Slope``.

        Parameters
        ----------
        names : sequence of str, optional
            Basis feature names; defaults to ``x1, x2, ...``.
        """
        parts = []
        for i, e in self.exponents:
            name = names[i] if names is not None else f"x{i + 1}"
            parts.append(name if e == 1 else f"{name}^{e}")
        return "*".join(parts)

    def dense(self, n: int) -> tuple[int, ...]:
        """Dense exponent tuple over ``n`` basis features."""
        out = [0] * n
        for i, e in self.exponents:
            if i >= n:
                raise ValueError(f"monomial uses feature index {i}, basis has {n}")
            out[i] = e
        return tuple(out)


def canonicalize(exponents: Mapping[int, int]) -> Monomial:
    """Validate a raw exponent map into a primitive :class:`Monomial`.

    Zero exponents are dropped. Raises ``ValueError`` for empty or
    non-positive maps, and for non-primitive maps the error names the
    primitive root the monomial reduces to (e.g. ``x1^2*x2^2`` reports
    ``x1*x2``).
    """
    cleaned = {int(i): int(e) for i, e in exponents.items() if int(e) != 0}
    if not cleaned:
        raise ValueError("a monomial needs at least one factor")
    if any(e < 0 for e in cleaned.values()):
        raise ValueError("exponents must be strictly positive")
    return Monomial.from_map(cleaned)


def _sort_key(m: Monomial, n: int) -> tuple[int, tuple[int, ...]]:
    # Graded lexicographic: by level, then lexicographically on the dense
    # exponent vector with x1 ranked highest (so x1*x2 precedes x1*x3).
    return (m.level, tuple(-e for e in m.dense(n)))


def expand(n: int, max_level: int, *, multilinear: bool = False) -> list[Monomial]:
    """Enumerate all primitive monomials over ``n`` features up to ``max_level``.

    Parameters
    ----------
    n : int
        Number of basis features (>= 1).
    max_level : int
        Inclusive total-degree cap (>= 1).
    multilinear : bool
        If True, restrict to squarefree monomials (every exponent 1). Use
        this for idempotent/Boolean bases where powers are derivable.

    Returns
    -------
    list of Monomial
        Ordered by (level, graded-lexicographic exponent vector). Level 1 is
        exactly the ``n`` single features in index order.

    Raises
    ------
    UsageError
        If the expansion would exceed one million monomials, or on
        non-positive arguments.
    """
    if n < 1:
        raise UsageError(f"need at least one basis feature, got n={n}")
    if max_level < 1:
        raise UsageError(f"need max_level >= 1, got {max_level}")
    if multilinear:
        total = sum(math.comb(n, k) for k in range(1, min(n, max_level) + 1))
    else:
        total = math.comb(n + max_level, max_level) - 1
    if total > MAX_EXPANSION:
        raise UsageError(
            f"expansion of n={n} features to level {max_level} would produce "
            f"up to {total} composites (cap {MAX_EXPANSION}); lower the level"
        )

    out: list[Monomial] = []
    if multilinear:
        for deg in range(1, min(n, max_level) + 1):
            for support in combinations(range(n), deg):
                out.append(Monomial(tuple((i, 1) for i in support)))
    else:
        for deg in range(1, max_level + 1):
            for multiset in combinations_with_replacement(range(n), deg):
                expo: dict[int, int] = {}
                for i in multiset:
                    expo[i] = expo.get(i, 0) + 1
                if math.gcd(*expo.values()) != 1:
                    continue
                out.append(Monomial.from_map(expo))
    out.sort(key=lambda m: _sort_key(m, n))
    return out


def parse_label(label: str, names: Sequence[str] | None = None) -> Monomial:
    """Parse a product label like ``x1^2*x2`` back into a :class:`Monomial`.

    ``names`` gives the basis feature names; by default the generic
    ``x1, x2, ...`` naming is assumed. Unknown names and malformed
    exponents raise ``UsageError`` naming the offending factor.
    """
    exps: dict[int, int] = {}
    for part in label.split("*"):
        part = part.strip()
        name, _, e_str = part.partition("^")
        name = name.strip()
        if names is not None:
            if name not in names:
                raise UsageError(f"unknown feature {name!r} in label {label!r}")
            idx = list(names).index(name)
        else:
            if not (name.startswith("x") and name[1:].isdigit()):
                raise UsageError(f"unknown feature {name!r} in label {label!r}")
            idx = int(name[1:]) - 1
            if idx < 0:
                raise UsageError(f"feature indices start at x1, got {name!r}")
        try:
            e = int(e_str) if e_str else 1
        except ValueError:
            raise UsageError(
                f"malformed exponent {e_str!r} in label {label!r}"
            ) from None
        exps[idx] = exps.get(idx, 0) + e
    return canonicalize(exps)


def evaluate(m: Monomial, row: Sequence[float] | np.ndarray) -> float:
    """Evaluate one monomial on one raw feature row."""
    row = np.asarray(row, dtype=float)
    if m.max_index >= row.shape[-1]:
        raise ValueError(
            f"monomial uses feature index {m.max_index}, row has {row.shape[-1]}"
        )
    val = 1.0
    for i, e in m.exponents:
        val *= float(row[i]) ** e
    return val


def evaluate_matrix(ms: Iterable[Monomial], X: np.ndarray) -> np.ndarray:
    """Evaluate monomials column-wise on a raw feature matrix.

    Parameters
    ----------
    ms : iterable of Monomial
    X : ndarray, shape (n_samples, n_features)
        Raw (unstandardized) feature values.

    Returns
    -------
    ndarray, shape (n_samples, n_monomials)
        Raw composite values, one column per monomial, in input order.
        Standardization of these columns is a separate, explicit step so the
        convention (product of raw values, then standardize) stays visible.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got shape {X.shape}")
    ms = list(ms)
    out = np.ones((X.shape[0], len(ms)), dtype=float)
    for j, m in enumerate(ms):
        if m.max_index >= X.shape[1]:
            raise ValueError(
                f"monomial {m.label()} uses feature index {m.max_index}, "
                f"matrix has {X.shape[1]} features"
            )
        col = np.ones(X.shape[0], dtype=float)
        for i, e in m.exponents:
            col *= X[:, i] ** e
        out[:, j] = col
    return out


@dataclass(frozen=True)
class CompositeDesign:
    """Standardized composite columns for a candidate list on one dataset.

    ``chi`` holds the standardized composite values for every sample (all
    partitions); ``mean``/``std`` are the per-column statistics fitted on
    the train partition only, so the test partition never leaks into the
    scaling. ``labels`` use the dataset's feature names.
    """

    monomials: tuple[Monomial, ...]
    labels: tuple[str, ...]
    chi: np.ndarray
    mean: np.ndarray
    std: np.ndarray

    def column(self, label: str) -> np.ndarray:
        try:
            j = self.labels.index(label)
        except ValueError:
            raise DataError(f"no composite labeled {label!r}") from None
        return self.chi[:, j]


def composite_design(
    ms: Iterable[Monomial],
    ds,
    convention: str = "raw-product-then-standardize",
) -> CompositeDesign:
    """Build standardized composite columns for a dataset.

    The composite value is the product of *raw* feature values, standardized
    afterwards with train-partition statistics (the default convention). The
    alternative ``"standardize-then-product"`` convention standardizes the
    original features first and multiplies the standardized values; it is
    kept selectable so either behavior can be reproduced and compared.

    Raises
    ------
    DataError
        If any composite is constant on the train partition (zero variance),
        naming the offending composites.
    """
    ms = tuple(ms)
    if not ms:
        raise DataError("need at least one composite feature")
    if convention == "raw-product-then-standardize":
        base = ds.X
    elif convention == "standardize-then-product":
        from .dataset import Standardizer

        base = Standardizer.fit(
            ds.X[ds.train_indices()], ds.feature_names
        ).transform(ds.X)
    else:
        raise DataError(f"unknown composite convention {convention!r}")
    raw = evaluate_matrix(ms, base)
    labels = tuple(m.label(ds.feature_names) for m in ms)
    tr = ds.train_indices()
    if tr.size == 0:
        raise DataError("train partition is empty")
    mean = raw[tr].mean(axis=0)
    std = raw[tr].std(axis=0)
    dead = [labels[j] for j in np.flatnonzero(std == 0.0)]
    if dead:
        raise DataError(
            "composite feature(s) constant on the train partition: "
            + ", ".join(dead)
        )
    return CompositeDesign(
        monomials=ms,
        labels=labels,
        chi=(raw - mean) / std,
        mean=mean,
        std=std,
    )
