"""Online diagonal preconditioning

The preconditioners (T_k, Σ_k) are treated as online decisions. After every
PDHG step they receive the feedback losses

    ℓᵖ_k(T_k) = L(x^{k+1}(T_k), λ^k) − L(x^k, λ^k)
    ℓᵈ_k(Σ_k) = L(x^k, λ^k) − L(x^k, λ^{k+1}(Σ_k))

whose diagonal gradients are

    ∇ℓᵖ_k = −(η/ω) (c − Aᵀλ^k)² ∘ 𝕀(x^{k+1/2} ≥ 0)
    ∇ℓᵈ_k = −ηω (b − Ax^k) ∘ (b − A(2x^{k+1} − x^k))

and are updated by projected online gradient descent, every φ iterations,
with an AdaGrad or a constant step size.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from onlinepdhg.dataset.standard_form import LpProblem
from onlinepdhg.linalg.sparse import matvec, matvec_transpose
from onlinepdhg.preconditioning.static import DiagPreconditioner
from onlinepdhg.solver.pdhg import SaddleState, evaluate_lagrangian, pdhg_step

logger = logging.getLogger(__name__)

NORM_GUARD = 1e-30


class Scheduler(str, Enum):
    ADAGRAD = "adagrad"
    FIXED = "fixed"


class DualLossAnchor(str, Enum):
    """Primal point at which the dual feedback loss is evaluated"""

    XK = "xk"
    XNEXT = "xnext"


@dataclass
class OnlineConfig:
    """Online preconditioning parameters

    Parameters:
        alpha: Learning rate α ≥ 0. With α = 0 the preconditioners never move
        phi: Update the preconditioners every `phi` iterations
        normalize: Divide the gradients by ‖c − Aᵀλ^k‖² and ‖b − Ax^k‖²
        scheduler: adagrad or fixed step size
        adagrad_epsilon: ε in α / √(G + ε)
        dual_loss_anchor: Point of the diagnostic dual loss
        max_value: Optional upper cap of the preconditioner entries
    """

    alpha: float = 1e-2
    phi: int = 20
    normalize: bool = False
    scheduler: Scheduler = Scheduler.ADAGRAD
    adagrad_epsilon: float = 1e-10
    dual_loss_anchor: DualLossAnchor = DualLossAnchor.XK
    max_value: Optional[float] = None

    def __post_init__(self):
        self.scheduler = Scheduler(self.scheduler)
        self.dual_loss_anchor = DualLossAnchor(self.dual_loss_anchor)
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"The online learning rate must be nonnegative, got {self.alpha}")
        if int(self.phi) != self.phi or self.phi < 1:
            raise ValueError(f"The update frequency must be a positive integer, got {self.phi}")
        self.phi = int(self.phi)
        if not self.adagrad_epsilon > 0:
            raise ValueError(f"AdaGrad epsilon must be positive, got {self.adagrad_epsilon}")
        if self.max_value is not None and not self.max_value > 0:
            raise ValueError(f"The preconditioner cap must be positive, got {self.max_value}")


class OnlineLearner:
    """State of the online learner: AdaGrad accumulators and counters

    Parameters:
        config: Online configuration
        n: Number of primal variables
        m: Number of constraints
    """

    def __init__(self, config: OnlineConfig, n: int, m: int):
        self.config = config
        self.G_tau = np.zeros(n)
        self.G_sigma = np.zeros(m)
        self.updates = 0
        self.skipped = 0

    def should_update(self, k: int) -> bool:
        return k % self.config.phi == 0

    def __repr__(self) -> str:
        return (
            f"OnlineLearner(alpha={self.config.alpha}, phi={self.config.phi}, "
            f"updates={self.updates}, skipped={self.skipped})"
        )


def primal_loss(p: LpProblem, st_before: SaddleState, st_after: SaddleState) -> float:
    """L(x^{k+1}, λ^k) − L(x^k, λ^k)"""
    return evaluate_lagrangian(p, st_after.x, st_before.lam) - evaluate_lagrangian(
        p, st_before.x, st_before.lam
    )


def dual_loss(
    p: LpProblem,
    st_before: SaddleState,
    st_after: SaddleState,
    anchor: DualLossAnchor = DualLossAnchor.XK,
) -> float:
    """L(x, λ^k) − L(x, λ^{k+1}) with x = x^k or x^{k+1} depending on `anchor`"""
    anchor = DualLossAnchor(anchor)
    x = st_before.x if anchor == DualLossAnchor.XK else st_after.x
    return evaluate_lagrangian(p, x, st_before.lam) - evaluate_lagrangian(p, x, st_after.lam)


def primal_grad(
    p: LpProblem,
    x_k: np.ndarray,
    lam_k: np.ndarray,
    x_half: np.ndarray,
    eta: float,
    omega: float,
    direction: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Diagonal of the primal feedback gradient

    g_j = −(η/ω) (c − Aᵀλ^k)_j² 𝕀(x^{k+1/2}_j ≥ 0)

    Parameters:
        p: Problem the step was taken on
        x_k: x^k
        lam_k: λ^k
        x_half: Pre-projection point of the step
        eta: Step size of the step
        omega: Primal weight of the step
        direction: c − Aᵀλ^k when already available

    Returns:
        Vector of length n
    """
    if np.shape(x_k) != (p.n,) or np.shape(x_half) != (p.n,) or np.shape(lam_k) != (p.m,):
        raise ValueError("Primal gradient inputs do not match the problem dimensions")
    if direction is None:
        direction = p.c - matvec_transpose(p.A, lam_k)
    active = (np.asarray(x_half) >= 0).astype(np.float64)
    return -(eta / omega) * direction ** 2 * active


def dual_grad(
    p: LpProblem,
    x_k: np.ndarray,
    x_next: np.ndarray,
    lam_k: np.ndarray,
    eta: float,
    omega: float,
) -> np.ndarray:
    """Diagonal of the dual feedback gradient

    g_i = −ηω (b − Ax^k)_i (b − A(2x^{k+1} − x^k))_i

    Returns:
        Vector of length m
    """
    if np.shape(x_k) != (p.n,) or np.shape(x_next) != (p.n,) or np.shape(lam_k) != (p.m,):
        raise ValueError("Dual gradient inputs do not match the problem dimensions")
    x_k = np.asarray(x_k, dtype=np.float64)
    residual = p.b - matvec(p.A, x_k)
    extrapolated = p.b - matvec(p.A, 2.0 * np.asarray(x_next, dtype=np.float64) - x_k)
    return -(eta * omega) * residual * extrapolated


def normalize(
    g_primal: np.ndarray,
    g_dual: np.ndarray,
    c_minus_ATlam: np.ndarray,
    b_minus_Ax: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """Divide the gradients by ‖c − Aᵀλ^k‖² and ‖b − Ax^k‖²

    A squared norm below 1e-30 gives a zero gradient.
    """
    primal_sq = float(np.dot(c_minus_ATlam, c_minus_ATlam))
    dual_sq = float(np.dot(b_minus_Ax, b_minus_Ax))
    g_primal = np.asarray(g_primal, dtype=np.float64)
    g_dual = np.asarray(g_dual, dtype=np.float64)
    g_primal = g_primal / primal_sq if primal_sq >= NORM_GUARD else np.zeros_like(g_primal)
    g_dual = g_dual / dual_sq if dual_sq >= NORM_GUARD else np.zeros_like(g_dual)
    return g_primal, g_dual


def ogd_update(
    learner: OnlineLearner,
    pre: DiagPreconditioner,
    g_tau: np.ndarray,
    g_sigma: np.ndarray,
) -> DiagPreconditioner:
    """Projected online gradient step on the diagonal preconditioners

    τ ← max(0, τ − step ∘ g_τ) and σ ← max(0, σ − step ∘ g_σ), with
    step = α / √(G + ε) for AdaGrad (G accumulates g ∘ g) and step = α for
    the fixed scheduler. Entries are capped at `max_value` when configured.

    Parameters:
        learner: Learner whose accumulators are updated in place
        pre: Current preconditioners
        g_tau: Primal gradient, length n
        g_sigma: Dual gradient, length m

    Returns:
        The new preconditioners, or `pre` itself when a gradient is not finite
    """
    g_tau = np.asarray(g_tau, dtype=np.float64)
    g_sigma = np.asarray(g_sigma, dtype=np.float64)
    if g_tau.shape != pre.tau.shape or g_sigma.shape != pre.sigma.shape:
        raise ValueError(
            f"Gradients of size ({g_tau.size}, {g_sigma.size}) do not match "
            f"preconditioners of size ({pre.tau.size}, {pre.sigma.size})"
        )
    if not (np.all(np.isfinite(g_tau)) and np.all(np.isfinite(g_sigma))):
        learner.skipped += 1
        logger.warning("Non-finite online gradient, preconditioner update skipped")
        return pre

    cfg = learner.config
    if cfg.scheduler == Scheduler.ADAGRAD:
        learner.G_tau += g_tau * g_tau
        learner.G_sigma += g_sigma * g_sigma
        step_tau = cfg.alpha / np.sqrt(learner.G_tau + cfg.adagrad_epsilon)
        step_sigma = cfg.alpha / np.sqrt(learner.G_sigma + cfg.adagrad_epsilon)
    else:
        step_tau = cfg.alpha
        step_sigma = cfg.alpha

    tau = np.maximum(pre.tau - step_tau * g_tau, 0.0)
    sigma = np.maximum(pre.sigma - step_sigma * g_sigma, 0.0)
    if cfg.max_value is not None:
        tau = np.minimum(tau, cfg.max_value)
        sigma = np.minimum(sigma, cfg.max_value)
    learner.updates += 1
    return DiagPreconditioner(tau=tau, sigma=sigma)


def online_update(
    p: LpProblem,
    st_after: SaddleState,
    pre: DiagPreconditioner,
    learner: OnlineLearner,
    k: int,
) -> DiagPreconditioner:
    """Preconditioner update from the step that produced `st_after`

    Gradients use the η and ω of that step. Nothing happens unless
    k mod φ = 0.
    """
    if not learner.should_update(k):
        return pre
    step = st_after.last_step
    if step is None:
        raise ValueError("The state carries no step information")

    g_tau = primal_grad(
        p, step.x_prev, step.lam_prev, step.x_half, step.eta, step.omega,
        direction=step.primal_direction,
    )
    Ax_prev = step.Ax_prev if step.Ax_prev is not None else matvec(p.A, step.x_prev)
    b_minus_Ax = p.b - Ax_prev
    g_sigma = -(step.eta * step.omega) * b_minus_Ax * step.extrapolated_residual

    if learner.config.normalize:
        g_tau, g_sigma = normalize(g_tau, g_sigma, step.primal_direction, b_minus_Ax)
    return ogd_update(learner, pre, g_tau, g_sigma)


def online_step(
    p: LpProblem,
    st: SaddleState,
    pre: DiagPreconditioner,
    learner: OnlineLearner,
    eta: float = 1.0,
    omega: float = 1.0,
    k: Optional[int] = None,
) -> Tuple[SaddleState, DiagPreconditioner]:
    """One PDHG step followed by the online preconditioner update

    Parameters:
        p: Problem
        st: Current state
        pre: Current preconditioners
        learner: Online learner
        eta: Step size
        omega: Primal weight
        k: Global iteration counter, `st.k` when missing

    Returns:
        The new state and the preconditioners to use for the next step
    """
    k = st.k if k is None else k
    st_next = pdhg_step(p, st, pre, eta, omega)
    return st_next, online_update(p, st_next, pre, learner, k)
