"""Damped least-squares optimizer: steps, convergence, stop reasons."""

from __future__ import annotations

import numpy as np
import pytest

from snn.errors import NumericalError
from snn.lm import LmConfig, LmResult, lm_fit, lm_step, weighted_sse

from conftest import finite_difference_jacobian


class TestWeightedSse:
    def test_matches_manual_sum(self):
        r = np.array([1.0, -2.0, 3.0])
        w = np.array([1.0, 0.5, 2.0])
        assert weighted_sse(r, w) == pytest.approx(1.0 + 0.5 * 4.0 + 2.0 * 9.0)

    def test_unweighted_defaults_to_ones(self):
        r = np.array([3.0, 4.0])
        assert weighted_sse(r, None) == pytest.approx(25.0)


class TestLmStep:
    def test_solves_damped_normal_equations(self):
        rng = np.random.default_rng(0)
        J = rng.normal(size=(10, 3))
        r = rng.normal(size=10)
        w = rng.uniform(0.5, 2.0, size=10)
        lam = 0.7
        step = lm_step(J, r, w, lam)
        JtW = J.T * w
        lhs = JtW @ J + lam * np.eye(3)
        assert np.allclose(lhs @ step, -JtW @ r, atol=1e-12)

    def test_zero_damping_is_gauss_newton(self):
        rng = np.random.default_rng(1)
        J = rng.normal(size=(8, 2))
        r = rng.normal(size=8)
        step = lm_step(J, r, None, 0.0)
        gn = np.linalg.lstsq(J, -r, rcond=None)[0]
        assert np.allclose(step, gn, atol=1e-10)

    def test_huge_damping_is_scaled_gradient_descent(self):
        rng = np.random.default_rng(2)
        J = rng.normal(size=(8, 2))
        r = rng.normal(size=8)
        lam = 1e9
        step = lm_step(J, r, None, lam)
        grad = J.T @ r
        assert np.allclose(step, -grad / lam, rtol=1e-6)


class TestLmFit:
    def test_linear_residual_converges_in_few_epochs(self):
        # r(p) = p - 3 is linear: one Gauss-Newton step suffices
        fun = lambda p: p - 3.0
        jac = lambda p: np.eye(1)
        res = lm_fit(fun, jac, np.array([10.0]))
        assert res.params[0] == pytest.approx(3.0, abs=1e-8)
        assert res.epochs <= 5

    def test_recovers_single_gaussian(self):
        chi = np.linspace(-3.0, 3.0, 121)
        true = np.array([1.4, 0.9, -0.3])  # weight, scale, shift

        def model(p):
            return p[0] * np.exp(-((p[1] * chi + p[2]) ** 2))

        target = model(true)
        fun = lambda p: model(p) - target

        def jac(p):
            return finite_difference_jacobian(lambda q: model(q), p)

        res = lm_fit(fun, jac, true + np.array([0.3, -0.2, 0.25]))
        assert np.allclose(model(res.params), target, atol=1e-6)

    def test_weights_change_the_answer(self):
        chi = np.array([0.0, 1.0])
        target = np.array([0.0, 1.0])
        fun = lambda p: np.full(2, p[0]) - target
        jac = lambda p: np.ones((2, 1))
        flat = lm_fit(fun, jac, np.array([0.3]))
        assert flat.params[0] == pytest.approx(0.5, abs=1e-8)
        heavy = lm_fit(fun, jac, np.array([0.3]), weights=np.array([3.0, 1.0]))
        assert heavy.params[0] == pytest.approx(0.25, abs=1e-8)

    def test_trace_is_non_increasing(self):
        rng = np.random.default_rng(3)
        A = rng.normal(size=(20, 4))
        b = rng.normal(size=20)
        fun = lambda p: A @ p - b
        jac = lambda p: A
        res = lm_fit(fun, jac, rng.normal(size=4))
        assert all(b <= a + 1e-15 for a, b in zip(res.trace, res.trace[1:]))

    def test_zero_epoch_budget_returns_start(self):
        fun = lambda p: p - 3.0
        jac = lambda p: np.eye(1)
        res = lm_fit(fun, jac, np.array([1.0]),
                     config=LmConfig(max_epochs=0))
        assert res.params[0] == 1.0
        assert res.reason == "max_epochs"

    def test_non_finite_residual_raises(self):
        fun = lambda p: np.array([np.nan])
        jac = lambda p: np.eye(1)
        with pytest.raises(NumericalError):
            lm_fit(fun, jac, np.array([1.0]))

    def test_stop_reasons_are_documented_values(self):
        fun = lambda p: p - 3.0
        jac = lambda p: np.eye(1)
        res = lm_fit(fun, jac, np.array([10.0]))
        assert res.reason in ("grad", "step", "loss", "max_epochs")
