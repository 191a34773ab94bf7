"""Optimality residuals and termination

For  min cᵀx  s.t.  Ax = b, x ≥ 0  with dual λ the residuals are

- primal: ‖Ax − b‖
- dual:   ‖max(0, Aᵀλ − c)‖
- gap:    |cᵀx − bᵀλ|

and their relative counterparts divide by 1 + ‖b‖, 1 + ‖c‖ and
1 + |cᵀx| + |bᵀλ|.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from onlinepdhg.dataset.standard_form import LpProblem
from onlinepdhg.linalg.sparse import matvec, matvec_transpose
from onlinepdhg.solver.config import SolveConfig, TerminationStatus

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Residuals:
    primal_res: float
    dual_res: float
    gap: float
    rel_primal: float
    rel_dual: float
    rel_gap: float
    primal_objective: float = 0.0
    dual_objective: float = 0.0

    @property
    def kkt(self) -> float:
        """Euclidean norm of the three relative residuals"""
        return float(np.sqrt(self.rel_primal ** 2 + self.rel_dual ** 2 + self.rel_gap ** 2))

    def is_finite(self) -> bool:
        return bool(
            np.all(
                np.isfinite(
                    [self.primal_res, self.dual_res, self.gap, self.rel_primal, self.rel_dual, self.rel_gap]
                )
            )
        )

    def within(self, tolerance: float) -> bool:
        return (
            self.rel_primal <= tolerance
            and self.rel_dual <= tolerance
            and self.rel_gap <= tolerance
        )

    def trace_row(self, iteration: int) -> tuple:
        return (iteration, self.rel_primal, self.rel_dual, self.rel_gap, self.kkt)


def compute_residuals(
    p: LpProblem,
    x: np.ndarray,
    lam: np.ndarray,
    Ax: Optional[np.ndarray] = None,
    ATlam: Optional[np.ndarray] = None,
) -> Residuals:
    """Residuals of a primal-dual pair

    Parameters:
        p: Standard-form problem
        x: Primal point
        lam: Dual point
        Ax: A x when already available
        ATlam: Aᵀλ when already available

    Returns:
        Absolute and relative residuals
    """
    if Ax is None:
        Ax = matvec(p.A, x)
    if ATlam is None:
        ATlam = matvec_transpose(p.A, lam)
    primal_res = float(np.linalg.norm(Ax - p.b))
    dual_res = float(np.linalg.norm(np.maximum(ATlam - p.c, 0.0)))
    primal_obj = float(p.c @ x)
    dual_obj = float(p.b @ lam)
    gap = abs(primal_obj - dual_obj)
    return Residuals(
        primal_res=primal_res,
        dual_res=dual_res,
        gap=gap,
        rel_primal=primal_res / (1.0 + np.linalg.norm(p.b)),
        rel_dual=dual_res / (1.0 + np.linalg.norm(p.c)),
        rel_gap=gap / (1.0 + abs(primal_obj) + abs(dual_obj)),
        primal_objective=primal_obj,
        dual_objective=dual_obj,
    )


def check_termination(
    r: Residuals,
    cfg: SolveConfig,
    iteration: int = 0,
    elapsed: float = 0.0,
) -> Optional[TerminationStatus]:
    """Termination status for a residual evaluation

    Parameters:
        r: Residuals of the candidate point
        cfg: Solver configuration
        iteration: Iterations performed so far
        elapsed: Seconds elapsed so far

    Returns:
        OPTIMAL when the three relative residuals are within tolerance,
        NUMERICAL_ERROR for NaN residuals, ITERATION_LIMIT / TIME_LIMIT when
        a limit is reached, `None` to continue
    """
    if not r.is_finite():
        return TerminationStatus.NUMERICAL_ERROR
    if r.within(cfg.tolerance):
        return TerminationStatus.OPTIMAL
    if iteration >= cfg.iteration_limit:
        return TerminationStatus.ITERATION_LIMIT
    if elapsed >= cfg.time_limit:
        return TerminationStatus.TIME_LIMIT
    return None
