"""Internal: jointly fitted additive RBF networks over several features.

Used as the per-group model inside the tournament and as the incremental
model during forward selection. Structurally this is the same family as the
final superposable model — one Gaussian subnet per feature — but fitted
jointly in one damped-least-squares problem, with a single shared offset so
the per-feature offsets stay identifiable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import rng_for
from .errors import DataError
from .lm import LmConfig, LmResult, lm_fit

__all__ = ["AdditiveNet", "AdditiveFit", "fit_additive"]


@dataclass(frozen=True)
class AdditiveNet:
    """Shape of a joint additive RBF model: g features x v Gaussians each.

    Parameter vector layout: for each feature j, a block ``[w_j (v), a_j (v),
    b_j (v)]``; one trailing shared offset c. Feature j's contribution is
    ``sum_k w_jk exp(-(a_jk chi_j + b_jk)^2)`` (offset excluded).
    """

    n_features: int
    v: int

    @property
    def n_params(self) -> int:
        return 3 * self.v * self.n_features + 1

    def _blocks(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        g, v = self.n_features, self.v
        body = p[:-1].reshape(g, 3 * v)
        return body[:, :v], body[:, v : 2 * v], body[:, 2 * v :], float(p[-1])

    def contributions(self, p: np.ndarray, Chi: np.ndarray) -> np.ndarray:
        """Per-feature outputs (offset excluded), shape (n, g)."""
        w, a, b, _ = self._blocks(np.asarray(p, dtype=float))
        Chi = np.asarray(Chi, dtype=float)
        out = np.empty((Chi.shape[0], self.n_features), dtype=float)
        for j in range(self.n_features):
            u = np.multiply.outer(Chi[:, j], a[j]) + b[j]
            out[:, j] = np.exp(-(u * u)) @ w[j]
        return out

    def eval(self, p: np.ndarray, Chi: np.ndarray) -> np.ndarray:
        _, _, _, c = self._blocks(np.asarray(p, dtype=float))
        return self.contributions(p, Chi).sum(axis=1) + c

    def jacobian(self, p: np.ndarray, Chi: np.ndarray) -> np.ndarray:
        w, a, b, _ = self._blocks(np.asarray(p, dtype=float))
        Chi = np.asarray(Chi, dtype=float)
        n = Chi.shape[0]
        g, v = self.n_features, self.v
        J = np.empty((n, self.n_params), dtype=float)
        for j in range(g):
            chi = Chi[:, j]
            u = np.multiply.outer(chi, a[j]) + b[j]
            phi = np.exp(-(u * u))
            common = -2.0 * u * w[j] * phi
            base = 3 * v * j
            J[:, base : base + v] = phi
            J[:, base + v : base + 2 * v] = common * chi[:, None]
            J[:, base + 2 * v : base + 3 * v] = common
        J[:, -1] = 1.0
        return J

    def init_params(self, Chi: np.ndarray, seed: int, tags: tuple[str, ...]) -> np.ndarray:
        """Geometry init per feature (centers spread over the observed range)."""
        Chi = np.asarray(Chi, dtype=float)
        g, v = self.n_features, self.v
        p = np.zeros(self.n_params, dtype=float)
        for j in range(g):
            lo = float(Chi[:, j].min())
            hi = float(Chi[:, j].max())
            span = hi - lo
            if not np.isfinite(span) or span <= 1e-12:
                raise DataError(
                    f"feature {tags[j]!r} is constant over the fitting rows; "
                    "cannot place Gaussian units"
                )
            centers = lo + (np.arange(v) + 0.5) * span / v
            a = np.full(v, v / span)
            b = -a * centers
            w = rng_for(seed, "init", tags[j]).uniform(-0.1, 0.1, size=v)
            base = 3 * v * j
            p[base : base + v] = w
            p[base + v : base + 2 * v] = a
            p[base + 2 * v : base + 3 * v] = b
        return p


@dataclass(frozen=True)
class AdditiveFit:
    """A fitted joint additive model."""

    net: AdditiveNet
    params: np.ndarray
    result: LmResult

    def predict(self, Chi: np.ndarray) -> np.ndarray:
        return self.net.eval(self.params, Chi)

    def contributions(self, Chi: np.ndarray) -> np.ndarray:
        return self.net.contributions(self.params, Chi)


def fit_additive(
    Chi: np.ndarray,
    target: np.ndarray,
    v: int,
    weights: np.ndarray | None = None,
    seed: int = 0,
    tags: tuple[str, ...] | None = None,
    config: LmConfig | None = None,
) -> AdditiveFit:
    """Fit a joint additive RBF model by damped least squares."""
    Chi = np.asarray(Chi, dtype=float)
    target = np.asarray(target, dtype=float).ravel()
    if Chi.ndim != 2 or Chi.shape[0] != target.size:
        raise ValueError(f"Chi shape {Chi.shape} vs target shape {target.shape}")
    net = AdditiveNet(n_features=Chi.shape[1], v=v)
    if tags is None:
        tags = tuple(f"f{j}" for j in range(net.n_features))

    def residual(p: np.ndarray) -> np.ndarray:
        return net.eval(p, Chi) - target

    def jacobian(p: np.ndarray) -> np.ndarray:
        return net.jacobian(p, Chi)

    p0 = net.init_params(Chi, seed, tags)
    result = lm_fit(residual, jacobian, p0, weights=weights, config=config)
    return AdditiveFit(net=net, params=result.params, result=result)
