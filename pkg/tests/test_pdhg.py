import numpy as np
import pytest
from onlinepdhg.dataset.generators import random_feasible_lp
from onlinepdhg.linalg.sparse import matvec, matvec_transpose
from onlinepdhg.preconditioning.static import DiagPreconditioner
from onlinepdhg.solver.config import SolveConfig, TerminationStatus
from onlinepdhg.solver.pdhg import NumericalError, SaddleState, evaluate_lagrangian, pdhg_step
from onlinepdhg.solver.residuals import Residuals, check_termination, compute_residuals

from tests.problems import one_by_one, simplex_lp


def half_preconditioner(n: int, m: int) -> DiagPreconditioner:
    return DiagPreconditioner(tau=np.full(n, 0.5), sigma=np.full(m, 0.5))


class TestLagrangian:
    def test_value(self):
        assert evaluate_lagrangian(one_by_one(), np.array([2.0]), np.array([3.0])) == pytest.approx(-1.0)

    def test_non_finite(self):
        with pytest.raises(NumericalError):
            evaluate_lagrangian(one_by_one(), np.array([np.nan]), np.array([0.0]))


class TestPDHGStep:
    def test_one_by_one(self):
        st = pdhg_step(one_by_one(), SaddleState.zeros(1, 1), half_preconditioner(1, 1))
        assert st.x[0] == 0.0
        assert st.lam[0] == pytest.approx(0.5)
        assert st.k == 1
        assert st.last_step.x_half[0] == pytest.approx(-0.5)

    def test_converges_on_one_by_one(self):
        p = one_by_one()
        pre = half_preconditioner(1, 1)
        st = SaddleState.zeros(1, 1)
        for _ in range(2000):
            st = pdhg_step(p, st, pre)
        assert st.x[0] == pytest.approx(1.0, abs=1e-6)
        assert st.lam[0] == pytest.approx(1.0, abs=1e-6)

    def test_primal_stays_nonnegative(self):
        p = random_feasible_lp(4, 7, seed=3)
        pre = DiagPreconditioner(tau=np.full(7, 0.1), sigma=np.full(4, 0.1))
        st = SaddleState.zeros(7, 4)
        for _ in range(200):
            st = pdhg_step(p, st, pre)
            assert np.all(st.x >= 0)

    def test_matches_plain_iteration(self):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            m = int(rng.integers(1, 6))
            n = int(rng.integers(m, 10))
            p = random_feasible_lp(m, n, seed=seed)
            pre = DiagPreconditioner(tau=rng.uniform(0.05, 0.2, n), sigma=rng.uniform(0.05, 0.2, m))
            st = SaddleState.zeros(n, m)
            x, lam = np.zeros(n), np.zeros(m)
            for _ in range(10):
                st = pdhg_step(p, st, pre)
                x_next = np.maximum(x - pre.tau * (p.c - matvec_transpose(p.A, lam)), 0.0)
                lam = lam + pre.sigma * (p.b - matvec(p.A, 2.0 * x_next - x))
                x = x_next
            assert np.array_equal(st.x, x)
            assert np.array_equal(st.lam, lam)

    def test_fixed_point(self):
        p = simplex_lp()
        st = SaddleState(x=np.array([1.0, 0.0, 0.0]), lam=np.array([1.0]))
        pre = DiagPreconditioner(tau=np.full(3, 0.3), sigma=np.full(1, 0.3))
        st_next = pdhg_step(p, st, pre, eta=0.7, omega=1.3)
        assert np.allclose(st_next.x, st.x, atol=1e-9)
        assert np.allclose(st_next.lam, st.lam, atol=1e-9)

    def test_weighted_average(self):
        p = random_feasible_lp(3, 5, seed=2)
        pre = DiagPreconditioner.identity(5, 3)
        st = SaddleState.zeros(5, 3)
        xs, weights = [], []
        for eta in [0.1, 0.05, 0.2, 0.15]:
            st = pdhg_step(p, st, pre, eta=eta)
            xs.append(st.x)
            weights.append(eta)
        expected = np.average(np.array(xs), axis=0, weights=weights)
        assert np.allclose(st.x_avg, expected, rtol=1e-12, atol=1e-14)

    def test_cached_products(self):
        p = random_feasible_lp(3, 5, seed=4)
        st = pdhg_step(p, SaddleState.zeros(5, 3), DiagPreconditioner.identity(5, 3), eta=0.1)
        st.Ax(p)
        assert st.validate_cache(p)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            pdhg_step(one_by_one(), SaddleState.zeros(2, 1), DiagPreconditioner.identity(2, 1))

    def test_invalid_step(self):
        with pytest.raises(ValueError):
            pdhg_step(one_by_one(), SaddleState.zeros(1, 1), DiagPreconditioner.identity(1, 1), eta=0.0)

    def test_non_finite_iterate(self):
        p = one_by_one()
        p.b = np.array([np.nan])
        with pytest.raises(NumericalError):
            pdhg_step(p, SaddleState.zeros(1, 1), DiagPreconditioner.identity(1, 1))


class TestResiduals:
    def test_optimal_point(self):
        r = compute_residuals(one_by_one(), np.array([1.0]), np.array([1.0]))
        assert r.primal_res == 0.0
        assert r.dual_res == 0.0
        assert r.gap == 0.0

    def test_infeasible_point(self):
        r = compute_residuals(one_by_one(), np.array([0.0]), np.array([0.0]))
        assert r.primal_res == pytest.approx(1.0)
        assert r.rel_primal == pytest.approx(0.5)
        assert r.dual_res == 0.0
        assert r.gap == 0.0

    def test_termination(self):
        cfg = SolveConfig(tolerance=1e-4)
        r = Residuals(0.0, 0.0, 0.0, 1e-5, 1e-5, 2e-4)
        assert check_termination(r, cfg, iteration=10) is None
        assert check_termination(r, cfg, iteration=cfg.iteration_limit) == TerminationStatus.ITERATION_LIMIT
        assert check_termination(r, cfg, elapsed=cfg.time_limit) == TerminationStatus.TIME_LIMIT
        done = Residuals(0.0, 0.0, 0.0, 1e-5, 1e-5, 1e-5)
        assert check_termination(done, cfg, iteration=cfg.iteration_limit) == TerminationStatus.OPTIMAL
        nan = Residuals(np.nan, 0.0, 0.0, np.nan, 0.0, 0.0)
        assert check_termination(nan, cfg) == TerminationStatus.NUMERICAL_ERROR

    def test_trace_row(self):
        r = Residuals(0.0, 0.0, 0.0, 3e-4, 4e-4, 0.0)
        assert r.kkt == pytest.approx(5e-4)
        assert r.trace_row(7) == (7, 3e-4, 4e-4, 0.0, r.kkt)
