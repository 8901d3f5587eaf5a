"""Damped least-squares (Levenberg-Marquardt) fitting for small dense models.

Minimizes the weighted sum of squared residuals ``sum_i w_i * r_i(p)^2`` for
a differentiable residual vector ``r(p)``. Each epoch evaluates the Jacobian
once and solves the damped normal equations

    (J^T W J + lambda * I) delta = -J^T W r

retrying with a larger ``lambda`` until a step strictly decreases the
weighted SSE. Accepted steps shrink ``lambda``; rejected steps grow it, so
the iteration blends Gauss-Newton (small ``lambda``) with scaled gradient
descent (large ``lambda``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericalError

__all__ = ["LmConfig", "LmResult", "weighted_sse", "lm_step", "lm_fit"]

#: Damping escalation limit; solves that stay indefinite past this fail hard.
LAMBDA_CAP = 1e12


@dataclass(frozen=True)
class LmConfig:
    """Optimizer settings.

    Parameters
    ----------
    max_epochs : int
        Outer-iteration budget; one Jacobian evaluation per epoch.
    lambda0 : float
        Initial damping.
    lambda_up, lambda_down : float
        Damping multipliers on rejected / accepted steps.
    grad_tol : float
        Stop when the max-abs gradient component falls to or below this.
    step_tol : float
        Stop when an accepted (or final rejected) step's max-abs component
        falls to or below this.
    loss_tol : float
        Stop when the weighted SSE falls to or below this.
    """

    max_epochs: int = 50
    lambda0: float = 1e-2
    lambda_up: float = 10.0
    lambda_down: float = 0.1
    grad_tol: float = 1e-8
    step_tol: float = 1e-10
    loss_tol: float = 1e-14

    def __post_init__(self) -> None:
        if self.max_epochs < 0:
            raise ValueError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if self.lambda0 < 0:
            raise ValueError(f"lambda0 must be >= 0, got {self.lambda0}")
        if self.lambda_up <= 1.0:
            raise ValueError(f"lambda_up must exceed 1, got {self.lambda_up}")
        if not 0.0 < self.lambda_down < 1.0:
            raise ValueError(f"lambda_down must be in (0, 1), got {self.lambda_down}")


@dataclass(frozen=True)
class LmResult:
    """Fit outcome.

    ``epochs`` counts accepted steps; ``reason`` is one of ``"grad"``,
    ``"step"``, ``"loss"``, ``"max_epochs"``. ``trace`` records the weighted
    SSE after each accepted epoch (starting value first).
    """

    params: np.ndarray
    sse: float
    epochs: int
    reason: str
    lam: float
    trace: tuple[float, ...] = field(default=())


def weighted_sse(r: np.ndarray, w: np.ndarray | None = None) -> float:
    """Weighted sum of squared residuals ``sum w_i r_i^2`` (w defaults to 1)."""
    r = np.asarray(r, dtype=float)
    if w is None:
        return float(r @ r)
    w = np.asarray(w, dtype=float)
    return float(w @ (r * r))


def lm_step(
    J: np.ndarray,
    r: np.ndarray,
    w: np.ndarray | None,
    lam: float,
) -> np.ndarray:
    """Solve the damped normal equations for one candidate step.

    Uses a Cholesky factorization as the positive-definiteness check; raises
    ``NumericalError`` if the damped system is not SPD (callers escalate
    ``lam`` and retry). As ``lam`` grows the step tends to
    ``-(J^T W r) / lam``, i.e. a shrinking move along the negative gradient.
    """
    J = np.asarray(J, dtype=float)
    r = np.asarray(r, dtype=float)
    Jw = J if w is None else J * np.asarray(w, dtype=float)[:, None]
    A = Jw.T @ J
    A[np.diag_indices_from(A)] += lam
    g = Jw.T @ r
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise NumericalError(
            f"damped normal equations not positive definite at lambda={lam:g}"
        ) from None
    return np.linalg.solve(A, -g)


def lm_fit(
    fun: Callable[[np.ndarray], np.ndarray],
    jac: Callable[[np.ndarray], np.ndarray],
    p0: np.ndarray,
    weights: np.ndarray | None = None,
    config: LmConfig | None = None,
) -> LmResult:
    """Fit parameters by damped least squares.

    Parameters
    ----------
    fun : callable
        Residual function ``p -> r`` (model minus target), shape (n,).
    jac : callable
        Jacobian ``p -> dr/dp``, shape (n, len(p)).
    p0 : ndarray
        Starting parameters.
    weights : ndarray, optional
        Per-residual weights (>= 0). Defaults to uniform.
    config : LmConfig, optional

    Returns
    -------
    LmResult
        Accepted steps strictly decrease the weighted SSE, so the trace is
        strictly decreasing. A residual already at or below ``loss_tol``
        returns immediately with 0 epochs and reason ``"loss"``.

    Raises
    ------
    NumericalError
        On non-finite residuals/Jacobians at the current parameters, or when
        damping escalates past 1e12 without producing a usable step.
    """
    cfg = config or LmConfig()
    p = np.asarray(p0, dtype=float).copy()
    w = None if weights is None else np.asarray(weights, dtype=float)
    if w is not None and np.any(w < 0):
        raise ValueError("weights must be non-negative")

    r = np.asarray(fun(p), dtype=float)
    if not np.all(np.isfinite(r)):
        raise NumericalError("residuals are not finite at the starting parameters")
    sse = weighted_sse(r, w)
    trace = [sse]
    lam = cfg.lambda0
    epochs = 0
    if sse <= cfg.loss_tol:
        return LmResult(p, sse, 0, "loss", lam, tuple(trace))

    for _ in range(cfg.max_epochs):
        J = np.asarray(jac(p), dtype=float)
        if not np.all(np.isfinite(J)):
            raise NumericalError("Jacobian is not finite at the current parameters")
        Jw = J if w is None else J * w[:, None]
        g = Jw.T @ r
        if float(np.max(np.abs(g))) <= cfg.grad_tol:
            return LmResult(p, sse, epochs, "grad", lam, tuple(trace))

        while True:
            try:
                delta = lm_step(J, r, w, lam)
            except NumericalError:
                lam *= cfg.lambda_up
                if lam > LAMBDA_CAP:
                    raise NumericalError(
                        "damping escalated past cap without a positive-definite "
                        "system; the model is degenerate at these parameters"
                    ) from None
                continue
            p_new = p + delta
            r_new = np.asarray(fun(p_new), dtype=float)
            sse_new = (
                weighted_sse(r_new, w) if np.all(np.isfinite(r_new)) else np.inf
            )
            if sse_new < sse:
                p, r, sse = p_new, r_new, sse_new
                lam *= cfg.lambda_down
                epochs += 1
                trace.append(sse)
                small_step = float(np.max(np.abs(delta))) <= cfg.step_tol
                if sse <= cfg.loss_tol:
                    return LmResult(p, sse, epochs, "loss", lam, tuple(trace))
                if small_step:
                    return LmResult(p, sse, epochs, "step", lam, tuple(trace))
                break
            # rejected: a vanishing step that still cannot improve means the
            # fit is at a local minimum to within float resolution
            if float(np.max(np.abs(delta))) <= cfg.step_tol:
                return LmResult(p, sse, epochs, "step", lam, tuple(trace))
            lam *= cfg.lambda_up
            if lam > LAMBDA_CAP:
                return LmResult(p, sse, epochs, "step", lam, tuple(trace))

    return LmResult(p, sse, epochs, "max_epochs", lam, tuple(trace))
