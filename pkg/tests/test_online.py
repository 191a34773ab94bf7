import logging

import numpy as np
import pytest
from onlinepdhg.dataset.generators import random_feasible_lp
from onlinepdhg.preconditioning.online import (
    DualLossAnchor,
    OnlineConfig,
    OnlineLearner,
    Scheduler,
    dual_grad,
    dual_loss,
    normalize,
    ogd_update,
    online_step,
    online_update,
    primal_grad,
    primal_loss,
)
from onlinepdhg.preconditioning.static import DiagPreconditioner, safeguard_scalars
from onlinepdhg.solver.pdhg import SaddleState, pdhg_step

from tests.problems import one_by_one

FD_STEP = 1e-6


def random_point(n: int, m: int, seed: int):
    rng = np.random.default_rng(seed)
    st = SaddleState(x=rng.uniform(0.0, 2.0, n), lam=rng.standard_normal(m))
    pre = DiagPreconditioner(tau=rng.uniform(0.1, 1.0, n), sigma=rng.uniform(0.1, 1.0, m))
    return st, pre


def step_sizes(p):
    t, s = safeguard_scalars(p.A)
    return float(np.sqrt(t * s)), float(np.sqrt(s / t))


class TestOnlineConfig:
    def test_invalid(self):
        with pytest.raises(ValueError):
            OnlineConfig(alpha=-1.0)
        with pytest.raises(ValueError):
            OnlineConfig(phi=0)
        with pytest.raises(ValueError):
            OnlineConfig(phi=1.5)

    def test_enums_from_strings(self):
        cfg = OnlineConfig(scheduler="fixed", dual_loss_anchor="xnext")
        assert cfg.scheduler == Scheduler.FIXED
        assert cfg.dual_loss_anchor == DualLossAnchor.XNEXT


class TestLosses:
    def test_primal_loss(self):
        p = one_by_one()
        before = SaddleState(x=np.array([2.0]), lam=np.array([0.0]))
        after = SaddleState(x=np.array([1.0]), lam=np.array([0.0]))
        assert primal_loss(p, before, after) == pytest.approx(-1.0)

    def test_dual_loss_anchors(self):
        p = one_by_one()
        before = SaddleState.zeros(1, 1)
        after = SaddleState(x=np.array([1.0]), lam=np.array([1.0]))
        assert dual_loss(p, before, after, DualLossAnchor.XK) == pytest.approx(-1.0)
        assert dual_loss(p, before, after, DualLossAnchor.XNEXT) == pytest.approx(0.0)


class TestGradients:
    def test_primal_grad_example(self):
        g = primal_grad(one_by_one(), np.array([0.0]), np.array([2.0]), np.array([1.0]), 1.0, 1.0)
        assert g[0] == pytest.approx(-1.0)

    def test_primal_grad_inactive(self):
        g = primal_grad(one_by_one(), np.array([0.0]), np.array([2.0]), np.array([-0.5]), 1.0, 1.0)
        assert g[0] == 0.0

    def test_dual_grad_example(self):
        g = dual_grad(one_by_one(), np.array([0.0]), np.array([0.0]), np.array([0.0]), 1.0, 1.0)
        assert g[0] == pytest.approx(-1.0)

    def test_dual_grad_nonpositive_when_primal_rests(self):
        p = random_feasible_lp(4, 6, seed=5)
        x = np.random.default_rng(5).uniform(0.0, 1.0, 6)
        g = dual_grad(p, x, x, np.zeros(4), 0.3, 2.0)
        assert np.all(g <= 0)

    def test_dimension_mismatch(self):
        p = random_feasible_lp(2, 3, seed=0)
        with pytest.raises(ValueError):
            primal_grad(p, np.zeros(2), np.zeros(2), np.zeros(3), 1.0, 1.0)
        with pytest.raises(ValueError):
            dual_grad(p, np.zeros(3), np.zeros(3), np.zeros(3), 1.0, 1.0)

    @pytest.mark.parametrize("start", range(0, 50, 5))
    def test_primal_finite_differences(self, start):
        for seed in range(start, start + 5):
            self.check_primal(seed)

    def check_primal(self, seed):
        p = random_feasible_lp(5, 8, seed=seed)
        st, pre = random_point(8, 5, seed)
        eta, omega = 0.4, 1.7
        st_after = pdhg_step(p, st, pre, eta, omega)
        info = st_after.last_step
        g = primal_grad(p, st.x, st.lam, info.x_half, eta, omega)

        for j in np.where(np.abs(info.x_half) > 1e-3)[0]:
            losses = []
            for h in (FD_STEP, -FD_STEP):
                tau = pre.tau.copy()
                tau[j] += h
                moved = pdhg_step(p, st, DiagPreconditioner(tau=tau, sigma=pre.sigma), eta, omega)
                losses.append(primal_loss(p, st, moved))
            fd = (losses[0] - losses[1]) / (2 * FD_STEP)
            assert fd == pytest.approx(g[j], rel=1e-5, abs=1e-6)

    @pytest.mark.parametrize("start", range(0, 50, 5))
    def test_dual_finite_differences(self, start):
        for seed in range(start, start + 5):
            self.check_dual(seed)

    def check_dual(self, seed):
        p = random_feasible_lp(5, 8, seed=seed)
        st, pre = random_point(8, 5, seed)
        eta, omega = 0.4, 1.7
        st_after = pdhg_step(p, st, pre, eta, omega)
        g = dual_grad(p, st.x, st_after.x, st.lam, eta, omega)

        for i in range(5):
            losses = []
            for h in (FD_STEP, -FD_STEP):
                sigma = pre.sigma.copy()
                sigma[i] += h
                moved = pdhg_step(p, st, DiagPreconditioner(tau=pre.tau, sigma=sigma), eta, omega)
                losses.append(dual_loss(p, st, moved))
            fd = (losses[0] - losses[1]) / (2 * FD_STEP)
            assert fd == pytest.approx(g[i], rel=1e-6, abs=1e-6)


class TestNormalize:
    def test_divides_by_squared_norms(self):
        g_p, g_d = normalize(np.array([2.0, 0.0]), np.array([3.0]), np.array([1.0, 1.0]), np.array([3.0]))
        assert np.allclose(g_p, [1.0, 0.0])
        assert np.allclose(g_d, [1.0 / 3.0])

    def test_tiny_norm_gives_zero(self):
        g_p, g_d = normalize(np.array([2.0]), np.array([3.0]), np.array([1e-20]), np.array([1.0]))
        assert np.all(g_p == 0.0)
        assert np.allclose(g_d, [3.0])


class TestOGDUpdate:
    def learner(self, **kwargs) -> OnlineLearner:
        return OnlineLearner(OnlineConfig(**kwargs), 1, 1)

    def test_fixed_step(self):
        learner = self.learner(alpha=0.1, scheduler="fixed")
        pre = ogd_update(learner, DiagPreconditioner.identity(1, 1), np.array([-2.0]), np.array([0.0]))
        assert pre.tau[0] == pytest.approx(1.2)
        assert pre.sigma[0] == pytest.approx(1.0)
        assert learner.updates == 1

    def test_adagrad_step(self):
        learner = self.learner(alpha=0.1)
        pre = ogd_update(learner, DiagPreconditioner.identity(1, 1), np.array([-2.0]), np.array([0.0]))
        assert pre.tau[0] == pytest.approx(1.1)
        assert learner.G_tau[0] == pytest.approx(4.0)

    def test_projection(self):
        learner = self.learner(alpha=0.1, scheduler="fixed")
        start = DiagPreconditioner(tau=np.array([0.05]), sigma=np.array([1.0]))
        pre = ogd_update(learner, start, np.array([1.0]), np.array([0.0]))
        assert pre.tau[0] == 0.0

    def test_cap(self):
        learner = self.learner(alpha=0.1, scheduler="fixed", max_value=1.05)
        pre = ogd_update(learner, DiagPreconditioner.identity(1, 1), np.array([-2.0]), np.array([-2.0]))
        assert pre.tau[0] == pytest.approx(1.05)
        assert pre.sigma[0] == pytest.approx(1.05)

    def test_non_finite_gradient(self, caplog):
        learner = self.learner(alpha=0.1)
        start = DiagPreconditioner.identity(1, 1)
        with caplog.at_level(logging.WARNING):
            pre = ogd_update(learner, start, np.array([np.nan]), np.array([0.0]))
        assert pre is start
        assert learner.skipped == 1
        assert learner.updates == 0
        assert "Non-finite" in caplog.text

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            ogd_update(self.learner(), DiagPreconditioner.identity(1, 1), np.zeros(2), np.zeros(1))


class TestOnlineStep:
    def test_one_by_one(self):
        learner = OnlineLearner(OnlineConfig(alpha=0.1, phi=1, scheduler="fixed"), 1, 1)
        start = DiagPreconditioner(tau=np.array([0.5]), sigma=np.array([0.5]))
        st, pre = online_step(one_by_one(), SaddleState.zeros(1, 1), start, learner)
        assert st.x[0] == 0.0
        assert st.lam[0] == pytest.approx(0.5)
        assert pre.tau[0] == pytest.approx(0.5)
        assert pre.sigma[0] == pytest.approx(0.6)

    @pytest.mark.parametrize("scheduler", list(Scheduler))
    def test_zero_learning_rate(self, scheduler):
        for seed in range(20):
            p = random_feasible_lp(4, 7, seed=seed)
            eta, omega = step_sizes(p)
            learner = OnlineLearner(OnlineConfig(alpha=0.0, phi=1, scheduler=scheduler), 7, 4)
            pre = DiagPreconditioner.identity(7, 4)
            plain = online = SaddleState.zeros(7, 4)
            for _ in range(100):
                plain = pdhg_step(p, plain, DiagPreconditioner.identity(7, 4), eta, omega)
                online, pre = online_step(p, online, pre, learner, eta, omega)
            assert np.array_equal(plain.x, online.x)
            assert np.array_equal(plain.lam, online.lam)

    def test_update_frequency(self):
        p = random_feasible_lp(4, 7, seed=9)
        eta, omega = step_sizes(p)
        learner = OnlineLearner(OnlineConfig(alpha=1e-3, phi=20), 7, 4)
        pre = DiagPreconditioner.identity(7, 4)
        st = SaddleState.zeros(7, 4)
        for k in range(500):
            st, new_pre = online_step(p, st, pre, learner, eta, omega)
            if k % 20 != 0:
                assert new_pre is pre
            pre = new_pre
        assert learner.updates + learner.skipped == 25

    def test_adagrad_accumulators_grow(self):
        p = random_feasible_lp(4, 7, seed=10)
        eta, omega = step_sizes(p)
        learner = OnlineLearner(OnlineConfig(alpha=1e-3, phi=1), 7, 4)
        pre = DiagPreconditioner.identity(7, 4)
        st = SaddleState.zeros(7, 4)
        for _ in range(50):
            G_tau, G_sigma = learner.G_tau.copy(), learner.G_sigma.copy()
            st, pre = online_step(p, st, pre, learner, eta, omega)
            assert np.all(learner.G_tau >= G_tau)
            assert np.all(learner.G_sigma >= G_sigma)
            assert np.all(pre.tau >= 0) and np.all(pre.sigma >= 0)

    def test_update_needs_step_information(self):
        learner = OnlineLearner(OnlineConfig(phi=1), 1, 1)
        with pytest.raises(ValueError):
            online_update(one_by_one(), SaddleState.zeros(1, 1), DiagPreconditioner.identity(1, 1), learner, 0)
