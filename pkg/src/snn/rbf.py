"""Gaussian radial-basis subnets and the superposable additive model.

A subnet maps one (standardized) composite feature ``chi`` to a partial
susceptibility score

    S_j(chi) = sum_k w_k * exp(-(a_k * chi + b_k)^2) + c_j

with unit output weights, so a full model is the plain sum of its subnets
plus nothing else: ``S_t = sum_j S_j``. That superposition is what makes the
model decomposable — each subnet's contribution can be read, plotted, added,
or removed independently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._util import fmt_float, rng_for, to_json
from .dataset import Standardizer
from .errors import DataError
from .lm import LmConfig, LmResult, lm_fit
from .monomials import Monomial

__all__ = [
    "SubnetParams",
    "subnet_eval",
    "subnet_jacobian",
    "init_subnet",
    "fit_subnet",
    "SnnSubnet",
    "SnnModel",
    "save_model",
    "load_model",
]

MODEL_FORMAT = "snn-model/1"


@dataclass(frozen=True)
class SubnetParams:
    """Weights of one Gaussian RBF subnet: S(chi) = sum w*exp(-(a*chi+b)^2) + c."""

    w: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: float

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=float)
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))
        if not (w.shape == a.shape == b.shape) or w.ndim != 1 or w.size < 1:
            raise ValueError(
                f"w/a/b must be equal-length 1-D arrays, got {w.shape}/{a.shape}/{b.shape}"
            )

    @property
    def v(self) -> int:
        """Number of Gaussian units."""
        return self.w.size

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.w, self.a, self.b, [self.c]])

    @staticmethod
    def from_vector(vec: np.ndarray, v: int) -> "SubnetParams":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (3 * v + 1,):
            raise ValueError(f"parameter vector shape {vec.shape}, expected ({3 * v + 1},)")
        return SubnetParams(w=vec[:v], a=vec[v : 2 * v], b=vec[2 * v : 3 * v], c=float(vec[-1]))


def subnet_eval(params: SubnetParams, chi: np.ndarray) -> np.ndarray:
    """Evaluate a subnet on standardized composite values ``chi`` (any shape)."""
    chi = np.asarray(chi, dtype=float)
    u = np.multiply.outer(chi, params.a) + params.b
    return np.exp(-(u * u)) @ params.w + params.c


def subnet_jacobian(params: SubnetParams, chi: np.ndarray) -> np.ndarray:
    """Partials of subnet outputs w.r.t. the parameter vector [w, a, b, c].

    With ``u_k = a_k*chi + b_k`` and ``phi_k = exp(-u_k^2)``:

    - d/dw_k = phi_k
    - d/da_k = -2 u_k w_k chi phi_k
    - d/db_k = -2 u_k w_k phi_k
    - d/dc   = 1
    """
    chi = np.asarray(chi, dtype=float).ravel()
    u = np.multiply.outer(chi, params.a) + params.b
    phi = np.exp(-(u * u))
    common = -2.0 * u * params.w * phi
    n = chi.size
    J = np.empty((n, 3 * params.v + 1), dtype=float)
    J[:, : params.v] = phi
    J[:, params.v : 2 * params.v] = common * chi[:, None]
    J[:, 2 * params.v : 3 * params.v] = common
    J[:, -1] = 1.0
    return J


def init_subnet(
    chi: np.ndarray,
    v: int,
    seed: int = 0,
    tag: str = "subnet",
) -> SubnetParams:
    """Geometry-aware initialization over the observed ``chi`` range.

    Gaussian centers ``-b_k/a_k`` are placed at the midpoints of ``v`` equal
    slices of ``[min(chi), max(chi)]`` (e.g. v=2 on [-1, 1] puts centers at
    -0.5 and +0.5); every unit width ``1/a_k`` is ``(max - min)/v``; output
    weights start small and random (uniform in [-0.1, 0.1], seeded); the
    offset starts at zero.
    """
    chi = np.asarray(chi, dtype=float)
    if v < 1:
        raise ValueError(f"need at least one Gaussian unit, got v={v}")
    lo = float(chi.min())
    hi = float(chi.max())
    span = hi - lo
    if not np.isfinite(span) or span <= 1e-12:
        raise DataError(
            f"feature {tag!r} is constant over the fitting rows; "
            "cannot place Gaussian units"
        )
    centers = lo + (np.arange(v) + 0.5) * span / v
    a = np.full(v, v / span)
    b = -a * centers
    w = rng_for(seed, "init", tag).uniform(-0.1, 0.1, size=v)
    return SubnetParams(w=w, a=a, b=b, c=0.0)


def fit_subnet(
    chi: np.ndarray,
    target: np.ndarray,
    v: int,
    weights: np.ndarray | None = None,
    seed: int = 0,
    tag: str = "subnet",
    config: LmConfig | None = None,
) -> tuple[SubnetParams, LmResult]:
    """Fit one subnet to ``target`` values by damped least squares."""
    chi = np.asarray(chi, dtype=float).ravel()
    target = np.asarray(target, dtype=float).ravel()
    if chi.shape != target.shape:
        raise ValueError(f"chi shape {chi.shape} vs target shape {target.shape}")
    p0 = init_subnet(chi, v, seed=seed, tag=tag)

    def residual(p: np.ndarray) -> np.ndarray:
        return subnet_eval(SubnetParams.from_vector(p, v), chi) - target

    def jacobian(p: np.ndarray) -> np.ndarray:
        return subnet_jacobian(SubnetParams.from_vector(p, v), chi)

    result = lm_fit(residual, jacobian, p0.to_vector(), weights=weights, config=config)
    return SubnetParams.from_vector(result.params, v), result


# ---------------------------------------------------------------------------
# Superposable model


@dataclass(frozen=True)
class SnnSubnet:
    """One named subnet plus the standardization of its composite input."""

    monomial: Monomial
    label: str
    chi_mean: float
    chi_std: float
    params: SubnetParams

    def __post_init__(self) -> None:
        if self.chi_std <= 0:
            raise DataError(f"subnet {self.label!r} has non-positive chi_std")

    def chi_from_raw(self, X: np.ndarray, convention: str, std: Standardizer | None) -> np.ndarray:
        """Composite input values from raw features, per the stated convention."""
        X = np.asarray(X, dtype=float)
        base = X if convention == "raw-product-then-standardize" else std.transform(X)  # type: ignore[union-attr]
        col = np.ones(X.shape[0], dtype=float)
        for i, e in self.monomial.exponents:
            col *= base[:, i] ** e
        return (col - self.chi_mean) / self.chi_std

    def contribution(self, X: np.ndarray, convention: str, std: Standardizer | None) -> np.ndarray:
        return subnet_eval(self.params, self.chi_from_raw(X, convention, std))


@dataclass(frozen=True)
class SnnModel:
    """A superposition of per-feature Gaussian subnets.

    ``evaluate`` returns both the total score and the per-subnet
    contributions; the total is the left-to-right sum of the contributions
    in declared subnet order, so the superposition identity
    ``S_t == sum_j S_j`` holds to float accumulation error and subnets can
    be added or removed without refitting the rest.
    """

    feature_names: tuple[str, ...]
    subnets: tuple[SnnSubnet, ...]
    composite_convention: str = "raw-product-then-standardize"
    original_standardizer: Standardizer | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        labels = [s.label for s in self.subnets]
        dupes = sorted({l for l in labels if labels.count(l) > 1})
        if dupes:
            raise DataError(f"duplicate subnet label(s): {', '.join(dupes)}")
        if self.composite_convention not in (
            "raw-product-then-standardize",
            "standardize-then-product",
        ):
            raise DataError(
                f"unknown composite convention {self.composite_convention!r}"
            )
        if self.composite_convention == "standardize-then-product" and (
            self.original_standardizer is None
        ):
            raise DataError(
                "standardize-then-product convention requires the original "
                "feature standardizer"
            )

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.subnets)

    def contributions(self, X: np.ndarray) -> np.ndarray:
        """Per-subnet scores, shape (n_samples, n_subnets), in subnet order."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise DataError(
                f"expected raw feature matrix with {len(self.feature_names)} "
                f"columns, got shape {X.shape}"
            )
        out = np.empty((X.shape[0], len(self.subnets)), dtype=float)
        for j, sub in enumerate(self.subnets):
            out[:, j] = sub.contribution(
                X, self.composite_convention, self.original_standardizer
            )
        return out

    def evaluate(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Total score and per-subnet contributions for raw feature rows."""
        contrib = self.contributions(X)
        total = np.zeros(contrib.shape[0], dtype=float)
        for j in range(contrib.shape[1]):
            total = total + contrib[:, j]
        return total, contrib

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Total susceptibility score S_t (never clamped or squashed)."""
        return self.evaluate(X)[0]

    def with_subnet(self, sub: SnnSubnet) -> "SnnModel":
        return replace(self, subnets=self.subnets + (sub,))

    def without_subnet(self, label: str) -> "SnnModel":
        if label not in self.labels:
            raise DataError(f"no subnet labeled {label!r}")
        return replace(
            self, subnets=tuple(s for s in self.subnets if s.label != label)
        )

    def as_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "feature_names": list(self.feature_names),
            "composite_convention": self.composite_convention,
            "original_standardizer": (
                None
                if self.original_standardizer is None
                else self.original_standardizer.as_dict()
            ),
            "subnets": [
                {
                    "label": s.label,
                    "exponents": [[i, e] for i, e in s.monomial.exponents],
                    "chi_mean": s.chi_mean,
                    "chi_std": s.chi_std,
                    "w": [float(x) for x in s.params.w],
                    "a": [float(x) for x in s.params.a],
                    "b": [float(x) for x in s.params.b],
                    "c": s.params.c,
                }
                for s in self.subnets
            ],
            "metadata": self.metadata,
        }

    @staticmethod
    def from_dict(d: Mapping) -> "SnnModel":
        fmt = d.get("format")
        if fmt != MODEL_FORMAT:
            raise DataError(
                f"unsupported model format {fmt!r} (this build reads {MODEL_FORMAT!r})"
            )
        subs = []
        for sd in d["subnets"]:
            subs.append(
                SnnSubnet(
                    monomial=Monomial(tuple((int(i), int(e)) for i, e in sd["exponents"])),
                    label=str(sd["label"]),
                    chi_mean=float(sd["chi_mean"]),
                    chi_std=float(sd["chi_std"]),
                    params=SubnetParams(
                        w=np.asarray(sd["w"], dtype=float),
                        a=np.asarray(sd["a"], dtype=float),
                        b=np.asarray(sd["b"], dtype=float),
                        c=float(sd["c"]),
                    ),
                )
            )
        std = d.get("original_standardizer")
        return SnnModel(
            feature_names=tuple(d["feature_names"]),
            subnets=tuple(subs),
            composite_convention=str(
                d.get("composite_convention", "raw-product-then-standardize")
            ),
            original_standardizer=None if std is None else Standardizer.from_dict(std),
            metadata=dict(d.get("metadata", {})),
        )


def save_model(model: SnnModel, path: str | Path) -> None:
    """Write a model as versioned JSON; floats keep 17 significant digits."""
    Path(path).write_text(to_json(model.as_dict()) + "\n")


def load_model(path: str | Path) -> SnnModel:
    """Read a model written by :func:`save_model`, checking the format tag."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid model JSON: {exc}") from None
    if not isinstance(d, dict):
        raise DataError(f"{path}: model file must hold a JSON object")
    return SnnModel.from_dict(d)
