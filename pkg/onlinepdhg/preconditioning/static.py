"""Static diagonal preconditioners

Diagonal rescalings computed once from the constraint matrix before the
iteration starts:

- Pock-Chambolle: closed form step sizes from powered row and column sums
- Ruiz: iterative equilibration of row and column infinity norms
- L2 rescaling: one pass dividing rows and columns by the square root of
  their Euclidean norm

A rescaling is stored as a `ScalingRecord` holding the row and column
multipliers D_r, D_c so that the scaled problem is Ã = D_r A D_c,
b̃ = D_r b, c̃ = D_c c. Points are brought back with x = D_c x̃ and
λ = D_r λ̃.
"""
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from onlinepdhg.dataset.standard_form import LpProblem
from onlinepdhg.linalg.sparse import SparseMatrix, axis_norms, estimate_spectral_norm

logger = logging.getLogger(__name__)

SAFEGUARD_TARGET = 0.99
SPECTRAL_MARGIN = 1.01
DEFAULT_RUIZ_ITERATIONS = 10


@dataclass(frozen=True)
class DiagPreconditioner:
    """Diagonal primal (tau) and dual (sigma) preconditioners, T = Diag(tau), Σ = Diag(sigma)"""

    tau: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if np.any(tau < 0) or np.any(sigma < 0):
            raise ValueError("Preconditioner entries must be nonnegative")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "sigma", sigma)

    @staticmethod
    def identity(n: int, m: int) -> "DiagPreconditioner":
        return DiagPreconditioner(tau=np.ones(n), sigma=np.ones(m))

    def check_dimensions(self, problem: LpProblem):
        if self.tau.shape != (problem.n,) or self.sigma.shape != (problem.m,):
            raise ValueError(
                f"Preconditioner of size ({self.tau.size}, {self.sigma.size}) "
                f"does not match a problem with n={problem.n}, m={problem.m}"
            )

    def equals(self, other: "DiagPreconditioner") -> bool:
        return np.array_equal(self.tau, other.tau) and np.array_equal(self.sigma, other.sigma)


@dataclass(frozen=True)
class ScalingRecord:
    """Cumulative row and column multipliers plus the safeguard scalars t, s"""

    row_scale: np.ndarray
    col_scale: np.ndarray
    t: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        row = np.asarray(self.row_scale, dtype=np.float64)
        col = np.asarray(self.col_scale, dtype=np.float64)
        if np.any(row <= 0) or np.any(col <= 0):
            raise ValueError("Scaling entries must be positive")
        object.__setattr__(self, "row_scale", row)
        object.__setattr__(self, "col_scale", col)

    @staticmethod
    def identity(m: int, n: int) -> "ScalingRecord":
        return ScalingRecord(row_scale=np.ones(m), col_scale=np.ones(n))

    def compose(self, other: "ScalingRecord") -> "ScalingRecord":
        """Record of applying `self` first and `other` afterwards"""
        return ScalingRecord(
            row_scale=self.row_scale * other.row_scale,
            col_scale=self.col_scale * other.col_scale,
            t=other.t,
            s=other.s,
        )

    def with_scalars(self, t: float, s: float) -> "ScalingRecord":
        return replace(self, t=float(t), s=float(s))

    def unscale_primal(self, x_scaled: np.ndarray) -> np.ndarray:
        return self.col_scale * x_scaled

    def unscale_dual(self, lam_scaled: np.ndarray) -> np.ndarray:
        return self.row_scale * lam_scaled

    def scale_primal(self, x: np.ndarray) -> np.ndarray:
        return x / self.col_scale

    def scale_dual(self, lam: np.ndarray) -> np.ndarray:
        return lam / self.row_scale


class StaticPreconditioning(str, Enum):
    NONE = "none"
    RUIZ = "ruiz"
    RUIZ_L2 = "ruiz_l2"
    POCK_CHAMBOLLE = "pock_chambolle"
    RUIZ_PC = "ruiz_pc"


def pock_chambolle(A: SparseMatrix, beta: float = 1.0) -> DiagPreconditioner:
    """Pock-Chambolle diagonal preconditioner

    τ_j = 1 / Σ_i |A_ij|^(2-β),  σ_i = 1 / Σ_j |A_ij|^β

    Coordinates of empty rows or columns get 0.

    Parameters:
        A: Constraint matrix
        beta: Exponent in [0, 2]

    Returns:
        The preconditioner
    """
    if not 0.0 <= beta <= 2.0:
        raise ValueError(f"beta must lie in [0, 2], got {beta}")
    col_sums = axis_norms(A, "cols", 2.0 - beta)
    row_sums = axis_norms(A, "rows", beta)
    return DiagPreconditioner(tau=_safe_inverse(col_sums), sigma=_safe_inverse(row_sums))


def _safe_inverse(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    mask = v > 0
    out[mask] = 1.0 / v[mask]
    return out


def ruiz(
    A: SparseMatrix, K: int = DEFAULT_RUIZ_ITERATIONS
) -> Tuple[ScalingRecord, SparseMatrix]:
    """Ruiz equilibration

    Each step divides τ_j by the largest magnitude in column j of the current
    scaled matrix and σ_i by the largest magnitude in row i, then sets
    Ã = Σ^(1/2) A T^(1/2).

    Parameters:
        A: Constraint matrix
        K: Number of steps

    Returns:
        The record (row scale √σ, column scale √τ) and the scaled matrix
    """
    if K < 1:
        raise ValueError(f"The number of Ruiz steps must be at least 1, got {K}")
    tau = np.ones(A.n)
    sigma = np.ones(A.m)
    scaled = A
    warned = False
    for _ in range(K):
        row_max = axis_norms(scaled, "rows", "inf")
        col_max = axis_norms(scaled, "cols", "inf")
        row_zero = row_max == 0
        col_zero = col_max == 0
        if (row_zero.any() or col_zero.any()) and not warned:
            logger.warning(
                f"Ruiz scaling found {int(row_zero.sum())} empty rows and "
                f"{int(col_zero.sum())} empty columns, their scaling is frozen"
            )
            warned = True
        sigma = np.where(row_zero, sigma, sigma / np.where(row_zero, 1.0, row_max))
        tau = np.where(col_zero, tau, tau / np.where(col_zero, 1.0, col_max))
        scaled = A.scale(np.sqrt(sigma), np.sqrt(tau))
    return ScalingRecord(row_scale=np.sqrt(sigma), col_scale=np.sqrt(tau)), scaled


def l2_rescale(A: SparseMatrix) -> Tuple[ScalingRecord, SparseMatrix]:
    """Divide every row and column by the square root of its l2 norm

    Both norms are taken on the input matrix. Empty rows and columns are left
    untouched.

    Parameters:
        A: Constraint matrix

    Returns:
        The record and the scaled matrix
    """
    row_norm = axis_norms(A, "rows", "l2")
    col_norm = axis_norms(A, "cols", "l2")
    if np.any(row_norm == 0) or np.any(col_norm == 0):
        logger.warning(
            f"L2 rescaling found {int((row_norm == 0).sum())} empty rows and "
            f"{int((col_norm == 0).sum())} empty columns, left unscaled"
        )
    row_scale = np.where(row_norm > 0, 1.0 / np.sqrt(np.where(row_norm > 0, row_norm, 1.0)), 1.0)
    col_scale = np.where(col_norm > 0, 1.0 / np.sqrt(np.where(col_norm > 0, col_norm, 1.0)), 1.0)
    return ScalingRecord(row_scale=row_scale, col_scale=col_scale), A.scale(row_scale, col_scale)


def pock_chambolle_rescale(
    A: SparseMatrix, beta: float = 1.0
) -> Tuple[ScalingRecord, SparseMatrix]:
    """Pock-Chambolle preconditioner folded into the data as D_r = √σ, D_c = √τ

    Empty rows and columns keep a unit scaling.
    """
    pre = pock_chambolle(A, beta)
    row_scale = np.where(pre.sigma > 0, np.sqrt(pre.sigma), 1.0)
    col_scale = np.where(pre.tau > 0, np.sqrt(pre.tau), 1.0)
    return ScalingRecord(row_scale=row_scale, col_scale=col_scale), A.scale(row_scale, col_scale)


def safeguard_scalars(
    A_scaled: SparseMatrix,
    ratio: float = 1.0,
    norm_estimate: Optional[float] = None,
) -> Tuple[float, float]:
    """Scalars t, s with t/s = ratio and t·s·(1.01‖Ã‖₂)² = 0.99

    Parameters:
        A_scaled: The rescaled matrix
        ratio: Desired t/s
        norm_estimate: Precomputed estimate of ‖Ã‖₂, estimated by power
            iteration when missing

    Returns:
        (t, s); (1, 1) for a zero matrix
    """
    if ratio <= 0:
        raise ValueError(f"The step ratio must be positive, got {ratio}")
    if norm_estimate is None:
        norm_estimate = estimate_spectral_norm(A_scaled)
    if norm_estimate <= 0:
        return 1.0, 1.0
    inflated = SPECTRAL_MARGIN * norm_estimate
    s = np.sqrt(SAFEGUARD_TARGET / ratio) / inflated
    return float(ratio * s), float(s)


def apply_scaling(p: LpProblem, rec: ScalingRecord) -> LpProblem:
    """Scaled problem Ã = D_r A D_c, b̃ = D_r b, c̃ = D_c c

    Parameters:
        p: Standard-form problem
        rec: Scaling to apply

    Returns:
        The scaled problem; `rec` maps its solutions back
    """
    if rec.row_scale.shape != (p.m,) or rec.col_scale.shape != (p.n,):
        raise ValueError(
            f"Scaling of size ({rec.row_scale.size}, {rec.col_scale.size}) "
            f"does not match a problem with m={p.m}, n={p.n}"
        )
    return LpProblem(
        c=rec.col_scale * p.c,
        b=rec.row_scale * p.b,
        A=p.A.scale(rec.row_scale, rec.col_scale),
        name=p.name,
    )


def precondition(
    p: LpProblem,
    method: StaticPreconditioning = StaticPreconditioning.RUIZ_L2,
    ruiz_iterations: int = DEFAULT_RUIZ_ITERATIONS,
    beta: float = 1.0,
) -> Tuple[LpProblem, ScalingRecord]:
    """Run one of the static preprocessing pipelines on a problem

    Parameters:
        p: Standard-form problem
        method: Which rescalings to chain
        ruiz_iterations: Number of Ruiz steps
        beta: Pock-Chambolle exponent

    Returns:
        The scaled problem and the cumulative record (t = s = 1)
    """
    method = StaticPreconditioning(method)
    record = ScalingRecord.identity(p.m, p.n)
    A = p.A
    steps = {
        StaticPreconditioning.NONE: [],
        StaticPreconditioning.RUIZ: [lambda M: ruiz(M, ruiz_iterations)],
        StaticPreconditioning.RUIZ_L2: [lambda M: ruiz(M, ruiz_iterations), l2_rescale],
        StaticPreconditioning.POCK_CHAMBOLLE: [lambda M: pock_chambolle_rescale(M, beta)],
        StaticPreconditioning.RUIZ_PC: [
            lambda M: ruiz(M, ruiz_iterations),
            lambda M: pock_chambolle_rescale(M, beta),
        ],
    }[method]
    for step in steps:
        step_record, A = step(A)
        record = record.compose(step_record)
    return apply_scaling(p, record), record
