"""Outer solve loop

`solve` preprocesses the problem, runs the PDHG iteration from
(x⁰, λ⁰) = (0, 0) with T₀ = I, Σ₀ = I, and reports the solution in the
units of the problem it was given.

Example:

``` py
from onlinepdhg.dataset.generators import random_feasible_lp
from onlinepdhg.preconditioning.online import OnlineConfig
from onlinepdhg.solver.config import SolveConfig
from onlinepdhg.solver.solve import solve

p = random_feasible_lp(5, 8, seed=1)
report = solve(p, SolveConfig(online=OnlineConfig(alpha=1e-2, phi=20)))
print(report.status, report.iterations)
```
"""
import logging
import time
from dataclasses import replace
from typing import Optional, Tuple

import numpy as np
from onlinepdhg.dataset.standard_form import LpProblem
from onlinepdhg.preconditioning.online import OnlineLearner, online_update
from onlinepdhg.preconditioning.static import (
    DiagPreconditioner,
    ScalingRecord,
    precondition,
    safeguard_scalars,
)
from onlinepdhg.solver.config import Mode, SolveConfig, SolveReport, TerminationStatus
from onlinepdhg.solver.enhancements import (
    RestartDecision,
    RestartState,
    StepController,
    adaptive_stepsize,
    apply_restart,
    initial_step_size,
    primal_weight_init,
    primal_weight_update,
    restart_check,
    restart_metric,
)
from onlinepdhg.solver.pdhg import NumericalError, SaddleState, pdhg_step
from onlinepdhg.solver.residuals import Residuals, check_termination, compute_residuals

logger = logging.getLogger(__name__)


def _evaluate(
    p: LpProblem, record: ScalingRecord, x: np.ndarray, lam: np.ndarray
) -> Tuple[Residuals, np.ndarray, np.ndarray]:
    x_orig = record.unscale_primal(x)
    lam_orig = record.unscale_dual(lam)
    return compute_residuals(p, x_orig, lam_orig), x_orig, lam_orig


def solve(p: LpProblem, cfg: Optional[SolveConfig] = None) -> SolveReport:
    """Solve a standard-form LP

    Parameters:
        p: Standard-form problem
        cfg: Solver configuration, defaults when missing

    Returns:
        The report; `x`, `lam` and the residuals are in the units of `p`
    """
    if cfg is None:
        cfg = SolveConfig()
    start = time.perf_counter()
    n, m = p.n, p.m

    scaled, record = precondition(
        p, cfg.static_preconditioning, cfg.ruiz_iterations, cfg.pc_beta
    )
    pre = DiagPreconditioner.identity(n, m)
    learner = OnlineLearner(cfg.online, n, m) if cfg.online is not None else None

    ctrl: Optional[StepController] = None
    rst: Optional[RestartState] = None
    if cfg.mode == Mode.VANILLA:
        t, s = safeguard_scalars(scaled.A, cfg.step_ratio)
        record = record.with_scalars(t, s)
        eta, omega = float(np.sqrt(t * s)), float(np.sqrt(s / t))
    else:
        omega = cfg.primal_weight if cfg.primal_weight is not None else primal_weight_init(scaled)
        eta = cfg.fixed_stepsize if cfg.fixed_stepsize is not None else initial_step_size(scaled.A)
        ctrl = StepController(eta=eta, omega=omega, max_retries=cfg.max_step_retries)
        if cfg.restarts:
            zeros_x, zeros_lam = np.zeros(n), np.zeros(m)
            rst = RestartState(
                x_start=zeros_x,
                lam_start=zeros_lam,
                start_metric=restart_metric(scaled, zeros_x, zeros_lam, omega),
            )
    adaptive = ctrl is not None and cfg.fixed_stepsize is None

    logger.info(
        f"Solving {p.name or 'problem'} ({m}x{n}, nnz={p.A.nnz}) in {cfg.mode.value} mode, "
        f"preprocessing {cfg.static_preconditioning.value}, "
        f"online {'off' if learner is None else f'alpha={cfg.online.alpha} phi={cfg.online.phi}'}"
    )

    st = SaddleState.zeros(n, m)
    trace = []
    status: Optional[TerminationStatus] = None
    reported: Optional[Tuple[Residuals, np.ndarray, np.ndarray]] = None

    try:
        while status is None:
            k = st.k
            if adaptive:
                st_next, ctrl = adaptive_stepsize(scaled, st, pre, ctrl)
            else:
                step_omega = ctrl.omega if ctrl is not None else omega
                st_next = pdhg_step(scaled, st, pre, eta, step_omega)
            if learner is not None:
                pre = online_update(scaled, st_next, pre, learner, k)
            st = st_next

            it = st.k
            elapsed = time.perf_counter() - start
            at_limit = it >= cfg.iteration_limit or elapsed >= cfg.time_limit
            check_due = it % cfg.check_stride == 0 or at_limit
            trace_due = it % cfg.trace_stride == 0

            if not (check_due or trace_due):
                continue

            current = _evaluate(p, record, st.x, st.lam)
            if trace_due:
                trace.append(current[0].trace_row(it))
            if not check_due:
                continue

            status = check_termination(current[0], cfg, it, elapsed)
            reported = current
            if status != TerminationStatus.OPTIMAL:
                average = _evaluate(p, record, st.x_avg, st.lam_avg)
                if average[0].within(cfg.tolerance):
                    status, reported = TerminationStatus.OPTIMAL, average
            logger.debug(
                f"Iteration {it}: kkt={current[0].kkt:.3e} (average {reported[0].kkt:.3e})"
            )
            if status is not None:
                break

            if rst is not None:
                omega_now = ctrl.omega
                decision = restart_check(
                    rst, st, lambda x, lam: restart_metric(scaled, x, lam, omega_now)
                )
                if decision != RestartDecision.NONE:
                    st, pre = apply_restart(rst, st, pre, decision)
                    if cfg.primal_weight is None:
                        omega_now = primal_weight_update(
                            st.x, st.lam, rst.x_start, rst.lam_start, omega_now
                        )
                        ctrl = replace(ctrl, omega=omega_now)
                    rst.start_period(
                        st.x, st.lam, restart_metric(scaled, st.x, st.lam, omega_now), st.k
                    )
    except NumericalError as e:
        logger.warning(f"Numerical error in {p.name or 'problem'}: {e}")
        status = TerminationStatus.NUMERICAL_ERROR
        # st is the last finite iterate
        reported = _evaluate(p, record, st.x, st.lam)

    residuals, x_out, lam_out = reported
    if not trace or trace[-1][0] != st.k:
        trace.append(residuals.trace_row(st.k))

    wall_time = time.perf_counter() - start
    report = SolveReport(
        status=status,
        iterations=st.k,
        x=x_out,
        lam=lam_out,
        wall_time=wall_time,
        trace=trace,
        residuals=residuals,
        restarts=rst.restarts if rst is not None else 0,
        objective=float(p.c @ x_out),
    )
    logger.info(
        f"{p.name or 'problem'}: {status.value} after {st.k} iterations "
        f"in {wall_time:.3f}s, objective {report.objective:.6e}"
    )
    return report
