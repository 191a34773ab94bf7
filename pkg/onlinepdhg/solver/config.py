"""Solver configuration and report types"""
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, List, Optional

import numpy as np
import pandas as pd
from onlinepdhg.preconditioning.static import StaticPreconditioning

if TYPE_CHECKING:
    from onlinepdhg.preconditioning.online import OnlineConfig
    from onlinepdhg.solver.residuals import Residuals

DEFAULT_TOLERANCE = 1e-4
DEFAULT_ITERATION_LIMIT = 50_000
DEFAULT_TIME_LIMIT = 600.0
DEFAULT_CHECK_STRIDE = 40
DEFAULT_TRACE_STRIDE = 10

TRACE_COLUMNS = ["iter", "rel_primal", "rel_dual", "rel_gap", "kkt"]


class Mode(str, Enum):
    """Iteration flavour

    - vanilla: constant step sizes from the safeguard scalars, no restarts
    - pdlp: adaptive step size, primal weight and adaptive restarts
    """

    VANILLA = "vanilla"
    PDLP = "pdlp"


class TerminationStatus(str, Enum):
    OPTIMAL = "OPTIMAL"
    ITERATION_LIMIT = "ITERATION_LIMIT"
    TIME_LIMIT = "TIME_LIMIT"
    NUMERICAL_ERROR = "NUMERICAL_ERROR"
    # Only produced by the benchmark when an instance can not be read
    LOAD_ERROR = "LOAD_ERROR"


@dataclass
class SolveConfig:
    """Configuration of a single solve

    Parameters:
        tolerance: Relative optimality tolerance
        iteration_limit: Maximum number of PDHG iterations
        time_limit: Wall-clock limit in seconds
        mode: vanilla or pdlp
        precondition: Static preprocessing. `None` picks the mode default
            (ruiz_l2 for vanilla, ruiz_pc for pdlp)
        online: Online preconditioning configuration, disabled when `None`
        check_stride: Iterations between termination (and restart) checks
        trace_stride: Iterations between two rows of the residual trace
        restarts: Enable adaptive restarts (pdlp mode)
        fixed_stepsize: Keep η constant at this value (pdlp mode)
        step_ratio: Ratio t/s of the vanilla step sizes
        ruiz_iterations: Number of Ruiz steps
        pc_beta: Exponent of the Pock-Chambolle rescaling
        max_step_retries: Step-size retries per iteration (pdlp mode)
        primal_weight: Keep ω constant at this value (pdlp mode)
    """

    tolerance: float = DEFAULT_TOLERANCE
    iteration_limit: int = DEFAULT_ITERATION_LIMIT
    time_limit: float = DEFAULT_TIME_LIMIT
    mode: Mode = Mode.VANILLA
    precondition: Optional[StaticPreconditioning] = None
    online: Optional["OnlineConfig"] = None
    check_stride: int = DEFAULT_CHECK_STRIDE
    trace_stride: int = DEFAULT_TRACE_STRIDE
    restarts: bool = True
    fixed_stepsize: Optional[float] = None
    step_ratio: float = 1.0
    ruiz_iterations: int = 10
    pc_beta: float = 1.0
    max_step_retries: int = 60
    primal_weight: Optional[float] = None

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.precondition is not None:
            self.precondition = StaticPreconditioning(self.precondition)
        if not self.tolerance > 0:
            raise ValueError(f"Tolerance must be positive, got {self.tolerance}")
        if self.iteration_limit < 1:
            raise ValueError(f"Iteration limit must be at least 1, got {self.iteration_limit}")
        if not self.time_limit > 0:
            raise ValueError(f"Time limit must be positive, got {self.time_limit}")
        if self.check_stride < 1 or self.trace_stride < 1:
            raise ValueError("Check and trace strides must be at least 1")
        if self.fixed_stepsize is not None and not self.fixed_stepsize > 0:
            raise ValueError(f"Fixed step size must be positive, got {self.fixed_stepsize}")
        if not self.step_ratio > 0:
            raise ValueError(f"Step ratio must be positive, got {self.step_ratio}")
        if self.primal_weight is not None and not self.primal_weight > 0:
            raise ValueError(f"Primal weight must be positive, got {self.primal_weight}")
        if self.max_step_retries < 0:
            raise ValueError("The number of step-size retries can not be negative")

    @property
    def static_preconditioning(self) -> StaticPreconditioning:
        if self.precondition is not None:
            return self.precondition
        if self.mode == Mode.PDLP:
            return StaticPreconditioning.RUIZ_PC
        return StaticPreconditioning.RUIZ_L2


@dataclass
class SolveReport:
    """Outcome of a solve

    Parameters:
        status: Termination status
        iterations: Number of PDHG iterations performed
        x: Primal solution in original units
        lam: Dual solution in original units
        wall_time: Seconds spent in the solve, preprocessing included
        trace: Rows (iter, rel_primal, rel_dual, rel_gap, kkt)
        residuals: Residuals of the reported point
        restarts: Number of restarts performed
        objective: cᵀx of the reported point
    """

    status: TerminationStatus
    iterations: int
    x: np.ndarray
    lam: np.ndarray
    wall_time: float
    trace: List[tuple] = field(default_factory=list)
    residuals: Optional["Residuals"] = None
    restarts: int = 0
    objective: float = float("nan")

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.trace, columns=TRACE_COLUMNS)

    def write_trace(self, path):
        """Write the residual trace as CSV with header iter,rel_primal,rel_dual,rel_gap,kkt"""
        self.trace_frame().to_csv(path, index=False)
