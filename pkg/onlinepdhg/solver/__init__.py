from onlinepdhg.solver.config import Mode, SolveConfig, SolveReport, TerminationStatus
from onlinepdhg.solver.pdhg import NumericalError, SaddleState, evaluate_lagrangian, pdhg_step
from onlinepdhg.solver.residuals import Residuals, check_termination, compute_residuals
from onlinepdhg.solver.enhancements import (
    RestartDecision,
    RestartState,
    StepController,
    adaptive_stepsize,
    apply_restart,
    primal_weight_init,
    restart_check,
)
