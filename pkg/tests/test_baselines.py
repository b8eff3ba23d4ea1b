"""Baseline solver tests: prox operator, ISTA/FISTA, projected gradient."""

from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from twometric.exceptions import ParameterError
from twometric.oracle import LassoInstance, OracleProblem, lasso_oracle, make_lasso
from twometric.baselines import (
    BaselineConfig,
    fista_solve,
    ista_solve,
    projected_gradient_solve,
    soft_threshold,
)


def one_d_oracle(a=1.0, b=2.0):
    inst = LassoInstance(A=np.array([[a]]), b=np.array([b]),
                         u_true=np.array([b / a]), gamma=0.5, seed=0)
    return lasso_oracle(inst)


def quadratic(c):
    c = np.asarray(c, dtype=float)
    return OracleProblem(
        n=len(c),
        value=lambda x: 0.5 * float((x - c) @ (x - c)),
        gradient=lambda x: np.asarray(x, dtype=float) - c,
        lipschitz_constant=1.0,
    )


class TestSoftThreshold:
    def test_zero_threshold_is_identity(self):
        z = np.array([2.0, -0.5, 1.0])
        assert_array_equal(soft_threshold(z, 0.0), z)

    def test_componentwise_formula(self):
        assert_allclose(soft_threshold(np.array([2.0, -0.5, 1.0]), 1.0),
                        [1.0, 0.0, 0.0])

    def test_negative_threshold_rejected(self):
        with pytest.raises(ParameterError):
            soft_threshold(np.array([1.0]), -0.1)

    def test_matches_grid_prox_oracle(self):
        """1000 random (z, t): output matches the grid argmin of
        0.5 (y-z)^2 + t|y| to grid resolution."""
        rng = np.random.default_rng(13)
        h = 1e-3
        for _ in range(1000):
            z = float(rng.uniform(-4, 4))
            t = float(rng.uniform(0, 3))
            grid = np.arange(-6.0, 6.0 + h, h)
            obj = 0.5 * (grid - z) ** 2 + t * np.abs(grid)
            best = grid[np.argmin(obj)]
            out = soft_threshold(np.array([z]), t)[0]
            assert abs(out - best) <= h / 2 + 1e-12


class TestIsta:
    def test_immediate_stop_at_solution(self):
        oracle = one_d_oracle()
        rep = ista_solve(oracle, 0.5, np.array([1.5]), BaselineConfig(tol=1e-10))
        assert rep.converged
        assert rep.iterations == 0

    def test_one_dimensional_solution(self):
        oracle = one_d_oracle()
        rep = ista_solve(oracle, 0.5, np.zeros(1), BaselineConfig(tol=1e-10))
        assert rep.converged
        assert rep.x[0] == pytest.approx(1.5, abs=1e-9)

    def test_objective_never_increases(self):
        inst = make_lasso(15, 40, 0.2, 1.0, seed=3)
        inst = replace(inst, gamma=0.1 * float(np.max(np.abs(inst.A.T @ inst.b))))
        oracle = lasso_oracle(inst)
        rep = ista_solve(oracle, inst.gamma, np.zeros(40),
                         BaselineConfig(tol=1e-5, max_iterations=50000))
        assert rep.converged
        psi = rep.column("psi")
        assert np.all(np.diff(psi) <= 0)

    def test_missing_step_size_rejected(self):
        oracle = OracleProblem(n=1, value=lambda x: 0.0,
                               gradient=lambda x: np.zeros(1))
        with pytest.raises(ParameterError):
            ista_solve(oracle, 1.0, np.zeros(1), BaselineConfig())


class TestFista:
    def test_momentum_first_update(self):
        t1 = 0.5 * (1.0 + np.sqrt(1.0 + 4.0))
        assert t1 == pytest.approx((1 + np.sqrt(5)) / 2)

    def test_one_dimensional_solution(self):
        oracle = one_d_oracle()
        rep = fista_solve(oracle, 0.5, np.zeros(1), BaselineConfig(tol=1e-10))
        assert rep.converged
        assert rep.x[0] == pytest.approx(1.5, abs=1e-9)

    def test_not_slower_than_ista_on_underdetermined_instances(self):
        # the momentum pays off in the flat m << n regime; on strongly convex
        # problems plain proximal gradient can win instead
        wins = 0
        for seed in range(10):
            inst = make_lasso(50, 200, 0.1, 1.0, seed=seed)
            inst = replace(inst, gamma=0.1 * float(np.max(np.abs(inst.A.T @ inst.b))))
            oracle = lasso_oracle(inst)
            cfg = BaselineConfig(tol=1e-6, max_iterations=100000)
            ni = ista_solve(oracle, inst.gamma, np.zeros(200), cfg).iterations
            nf = fista_solve(oracle, inst.gamma, np.zeros(200), cfg).iterations
            wins += nf <= ni
        assert wins == 10


class TestProjectedGradient:
    def test_interior_matches_plain_gradient_descent(self):
        oracle = quadratic([2.0, 3.0])
        rep = projected_gradient_solve(oracle, np.array([1.0, 1.0]),
                                       BaselineConfig(tol=1e-8, max_iterations=50))
        # replay: iterates never touch the boundary, so they equal x - s*g
        xs = [np.array([1.0, 1.0])]
        for _ in range(rep.iterations):
            xs.append(xs[-1] - oracle.gradient(xs[-1]))
        assert_allclose(rep.x, xs[-1], atol=1e-12)

    def test_one_dimensional_boundary_start(self):
        oracle = quadratic([1.0])
        rep = projected_gradient_solve(oracle, np.zeros(1),
                                       BaselineConfig(tol=1e-8))
        assert rep.converged
        assert rep.x[0] == pytest.approx(1.0, abs=1e-7)

    def test_mixed_activity_solution(self):
        oracle = quadratic([-1.0, 1.0])
        rep = projected_gradient_solve(oracle, np.array([0.5, 0.2]),
                                       BaselineConfig(tol=1e-8))
        assert rep.converged
        assert_allclose(rep.x, [0.0, 1.0], atol=1e-6)

    def test_uses_bound_trace_schema(self):
        oracle = quadratic([1.0])
        rep = projected_gradient_solve(oracle, np.zeros(1), BaselineConfig(tol=1e-6))
        assert "f" in rep.columns and "scaled_grad_norm" in rep.columns
