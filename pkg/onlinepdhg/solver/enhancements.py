"""Adaptive step size, primal weight and adaptive restarts

A step with step size η is accepted when

    η ≤ η̄ = (ω‖Δx‖²_{T⁻¹} + ‖Δλ‖²_{Σ⁻¹}/ω) / (2|ΔλᵀAΔx|)

and the next trial step size is min((1 − (k+1)^-0.3) η̄, (1 + (k+1)^-0.6) η).

Restarts compare the normalized KKT error

    μ(x, λ) = √(ω²‖Ax − b‖² + ‖(Aᵀλ − c)₊‖²/ω² + (cᵀx − bᵀλ)²)

of the better of the current iterate and the running average against its
value at the start of the period.
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Tuple

import numpy as np
from onlinepdhg.dataset.standard_form import LpProblem
from onlinepdhg.linalg.sparse import SparseMatrix, axis_norms, matvec, matvec_transpose
from onlinepdhg.preconditioning.static import DiagPreconditioner
from onlinepdhg.solver.pdhg import SaddleState, pdhg_step

logger = logging.getLogger(__name__)

STEP_REDUCTION_EXPONENT = 0.3
STEP_GROWTH_EXPONENT = 0.6
MAX_STEP_RETRIES = 60

RESTART_SUFFICIENT = 0.2
RESTART_NECESSARY = 0.8
RESTART_ARTIFICIAL = 0.36

PRIMAL_WEIGHT_SMOOTHING = 0.5
MOVEMENT_EPS = 1e-12


@dataclass
class StepController:
    """Step size η and primal weight ω of the pdlp mode"""

    eta: float
    omega: float
    accepted_steps: int = 0
    rejected_steps: int = 0
    exhausted: int = 0
    reduction_exponent: float = STEP_REDUCTION_EXPONENT
    growth_exponent: float = STEP_GROWTH_EXPONENT
    max_retries: int = MAX_STEP_RETRIES

    def __post_init__(self):
        for name in ("eta", "omega"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value}")


def initial_step_size(A: SparseMatrix) -> float:
    """1 / ‖A‖_∞, the largest absolute row sum, as a cheap proxy of 1/‖A‖₂

    Note this is the row sum, not the largest entry, so the first trial step
    is never larger than 1/max|aᵢⱼ|.
    """
    row_sums = axis_norms(A, "rows", 1.0)
    largest = float(row_sums.max()) if row_sums.size > 0 else 0.0
    if largest <= 0:
        return 1.0
    return 1.0 / largest


def primal_weight_init(p: LpProblem) -> float:
    """ω = ‖c‖/‖b‖ when both norms exceed 1e-12, else 1"""
    c_norm = float(np.linalg.norm(p.c))
    b_norm = float(np.linalg.norm(p.b))
    if c_norm > MOVEMENT_EPS and b_norm > MOVEMENT_EPS:
        return c_norm / b_norm
    return 1.0


def step_bound(
    st_before: SaddleState,
    st_after: SaddleState,
    pre: DiagPreconditioner,
    omega: float,
) -> float:
    """Largest step size the move from `st_before` to `st_after` certifies

    Norms are taken in the T⁻¹ and Σ⁻¹ geometry; coordinates with a zero
    preconditioner entry do not move and are skipped.

    Returns:
        η̄, `inf` when ΔλᵀAΔx = 0
    """
    dx = st_after.x - st_before.x
    dlam = st_after.lam - st_before.lam
    d_ATlam = st_after._ATlam - st_after.last_step.ATlam_prev
    interaction = abs(float(dx @ d_ATlam))
    if interaction == 0.0:
        return float("inf")
    tau_mask = pre.tau > 0
    sigma_mask = pre.sigma > 0
    primal = float(np.sum(dx[tau_mask] ** 2 / pre.tau[tau_mask]))
    dual = float(np.sum(dlam[sigma_mask] ** 2 / pre.sigma[sigma_mask]))
    return (omega * primal + dual / omega) / (2.0 * interaction)


def adaptive_stepsize(
    p: LpProblem,
    st: SaddleState,
    pre: DiagPreconditioner,
    ctrl: StepController,
) -> Tuple[SaddleState, StepController]:
    """Take one pdhg step with the adaptive step-size rule

    Trial steps are retried with a reduced η until η ≤ η̄; after
    `ctrl.max_retries` retries the last trial is accepted with a warning.

    Parameters:
        p: Scaled problem
        st: Current state
        pre: Preconditioners
        ctrl: Current controller

    Returns:
        The accepted state (its `last_step.eta` is the step size used) and
        the controller holding the next trial step size
    """
    k = st.k
    fac_reduce = 1.0 if k == 0 else 1.0 - (k + 1) ** (-ctrl.reduction_exponent)
    fac_grow = 1.0 + (k + 1) ** (-ctrl.growth_exponent)

    eta = ctrl.eta
    rejected = 0
    for _ in range(ctrl.max_retries + 1):
        trial = pdhg_step(p, st, pre, eta, ctrl.omega)
        bound = step_bound(st, trial, pre, ctrl.omega)
        next_eta = min(fac_reduce * bound, fac_grow * eta)
        if eta <= bound:
            return trial, replace(
                ctrl,
                eta=next_eta,
                accepted_steps=ctrl.accepted_steps + 1,
                rejected_steps=ctrl.rejected_steps + rejected,
            )
        rejected += 1
        eta = next_eta

    logger.warning(
        f"Step size not accepted after {ctrl.max_retries} retries at iteration {k}, "
        f"keeping η = {trial.last_step.eta:.3e}"
    )
    return trial, replace(
        ctrl,
        eta=trial.last_step.eta,
        accepted_steps=ctrl.accepted_steps + 1,
        rejected_steps=ctrl.rejected_steps + rejected,
        exhausted=ctrl.exhausted + 1,
    )


def restart_metric(p: LpProblem, x: np.ndarray, lam: np.ndarray, omega: float) -> float:
    """Normalized KKT error μ(x, λ) on the (scaled) problem"""
    primal = matvec(p.A, x) - p.b
    dual = np.maximum(matvec_transpose(p.A, lam) - p.c, 0.0)
    gap = float(p.c @ x - p.b @ lam)
    return float(
        np.sqrt(omega ** 2 * (primal @ primal) + (dual @ dual) / omega ** 2 + gap ** 2)
    )


class RestartDecision(str, Enum):
    NONE = "none"
    TO_AVERAGE = "restart_to_average"
    TO_CURRENT = "restart_to_current"


@dataclass
class RestartState:
    """Bookkeeping of the current restart period

    Parameters:
        x_start: Primal iterate at the start of the period
        lam_start: Dual iterate at the start of the period
        start_metric: μ at the start of the period
        period_start: Iteration at which the period started
        previous_metric: Candidate μ at the previous check of the period
        restarts: Number of restarts so far
    """

    x_start: np.ndarray
    lam_start: np.ndarray
    start_metric: float
    period_start: int = 0
    previous_metric: float = float("inf")
    restarts: int = 0
    beta_sufficient: float = RESTART_SUFFICIENT
    beta_necessary: float = RESTART_NECESSARY
    beta_artificial: float = RESTART_ARTIFICIAL
    candidate_metric: float = field(default=float("inf"), repr=False)

    def start_period(self, x: np.ndarray, lam: np.ndarray, metric: float, iteration: int):
        self.x_start = np.array(x, copy=True)
        self.lam_start = np.array(lam, copy=True)
        self.start_metric = metric
        self.period_start = iteration
        self.previous_metric = float("inf")


def restart_check(
    rst: RestartState,
    st: SaddleState,
    metric: Callable[[np.ndarray, np.ndarray], float],
) -> RestartDecision:
    """Decide whether to restart and to which candidate

    The candidate is the better (lower μ) of the current iterate and the
    running average. A restart happens when

    - μ(candidate) ≤ 0.2 μ(start), or
    - μ(candidate) ≤ 0.8 μ(start) and μ(candidate) grew since the previous
      check, or
    - the period is longer than 0.36 times the total iteration count.

    The first iteration of a period never restarts.

    Parameters:
        rst: Restart bookkeeping, its `previous_metric` is updated
        st: Current state
        metric: μ as a function of (x, λ)

    Returns:
        The decision
    """
    period = st.k - rst.period_start
    if period <= 1:
        return RestartDecision.NONE

    current = metric(st.x, st.lam)
    average = metric(st.x_avg, st.lam_avg)
    if current < average:
        candidate, decision = current, RestartDecision.TO_CURRENT
    else:
        candidate, decision = average, RestartDecision.TO_AVERAGE
    rst.candidate_metric = candidate

    sufficient = candidate <= rst.beta_sufficient * rst.start_metric
    necessary = (
        candidate <= rst.beta_necessary * rst.start_metric
        and candidate > rst.previous_metric
    )
    artificial = period >= rst.beta_artificial * st.k
    rst.previous_metric = candidate

    if sufficient or necessary or artificial:
        logger.debug(
            f"Restart at iteration {st.k} ({decision.value}): μ = {candidate:.3e}, "
            f"μ at period start = {rst.start_metric:.3e}"
        )
        return decision
    return RestartDecision.NONE


def apply_restart(
    rst: RestartState,
    st: SaddleState,
    pre: DiagPreconditioner,
    decision: RestartDecision,
) -> Tuple[SaddleState, DiagPreconditioner]:
    """Move the iterate to the chosen candidate and clear the averages

    The preconditioners are returned as they are.

    Raises:
        ValueError: When `decision` is NONE
    """
    decision = RestartDecision(decision)
    if decision == RestartDecision.NONE:
        raise ValueError("apply_restart needs a restart decision")
    if decision == RestartDecision.TO_AVERAGE:
        restarted = st.restarted_at(st.x_avg, st.lam_avg)
    else:
        restarted = st.restarted_at(st.x, st.lam)
    rst.restarts += 1
    return restarted, pre


def primal_weight_update(
    x_new: np.ndarray,
    lam_new: np.ndarray,
    x_old: np.ndarray,
    lam_old: np.ndarray,
    omega: float,
    smoothing: float = PRIMAL_WEIGHT_SMOOTHING,
) -> float:
    """ω ← exp(θ log(‖Δλ‖/‖Δx‖) + (1 − θ) log ω), unchanged for tiny movements"""
    dx = float(np.linalg.norm(x_new - x_old))
    dlam = float(np.linalg.norm(lam_new - lam_old))
    if dx > MOVEMENT_EPS and dlam > MOVEMENT_EPS:
        return float(np.exp(smoothing * np.log(dlam / dx) + (1.0 - smoothing) * np.log(omega)))
    return omega
