"""Preconditioned PDHG iteration for  min cᵀx  s.t.  Ax = b, x ≥ 0

One step with step size η, primal weight ω and diagonal preconditioners
T = Diag(τ), Σ = Diag(σ):

    x⁺ = proj_{x ≥ 0}(x − (η/ω) T (c − Aᵀλ))
    λ⁺ = λ + ηω Σ (b − A(2x⁺ − x))

With η = ω = 1 this is the plain preconditioned iteration.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from onlinepdhg.dataset.standard_form import LpProblem
from onlinepdhg.linalg.sparse import matvec, matvec_transpose
from onlinepdhg.preconditioning.static import DiagPreconditioner

logger = logging.getLogger(__name__)


class NumericalError(ArithmeticError):
    """A non-finite value appeared in the iteration"""


@dataclass
class StepInfo:
    """Quantities of the step that produced a state

    Parameters:
        x_prev: x^k
        lam_prev: λ^k
        x_half: Pre-projection point x^k − (η/ω) T (c − Aᵀλ^k)
        primal_direction: c − Aᵀλ^k
        extrapolated_residual: b − A(2x^{k+1} − x^k)
        Ax_prev: A x^k, when it was available
        ATlam_prev: Aᵀλ^k
        eta: Step size used
        omega: Primal weight used
    """

    x_prev: np.ndarray
    lam_prev: np.ndarray
    x_half: np.ndarray
    primal_direction: np.ndarray
    extrapolated_residual: np.ndarray
    ATlam_prev: np.ndarray
    eta: float
    omega: float
    Ax_prev: Optional[np.ndarray] = None


@dataclass
class SaddleState:
    """Primal-dual iterate with its running averages and cached products

    The averages are weighted by the step size η of every step since the last
    restart.
    """

    x: np.ndarray
    lam: np.ndarray
    k: int = 0
    x_sum: Optional[np.ndarray] = None
    lam_sum: Optional[np.ndarray] = None
    weight_sum: float = 0.0
    last_step: Optional[StepInfo] = field(default=None, repr=False)
    _Ax: Optional[np.ndarray] = field(default=None, repr=False)
    _ATlam: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.lam = np.asarray(self.lam, dtype=np.float64)
        if self.x_sum is None:
            self.x_sum = np.zeros_like(self.x)
        if self.lam_sum is None:
            self.lam_sum = np.zeros_like(self.lam)

    @staticmethod
    def zeros(n: int, m: int) -> "SaddleState":
        return SaddleState(x=np.zeros(n), lam=np.zeros(m))

    def Ax(self, p: LpProblem) -> np.ndarray:
        if self._Ax is None:
            self._Ax = matvec(p.A, self.x)
        return self._Ax

    def ATlam(self, p: LpProblem) -> np.ndarray:
        if self._ATlam is None:
            self._ATlam = matvec_transpose(p.A, self.lam)
        return self._ATlam

    def validate_cache(self, p: LpProblem, rtol: float = 1e-12) -> bool:
        """Check the cached products against fresh ones"""
        ok = True
        if self._Ax is not None:
            ok &= np.allclose(self._Ax, matvec(p.A, self.x), rtol=rtol, atol=0.0)
        if self._ATlam is not None:
            ok &= np.allclose(self._ATlam, matvec_transpose(p.A, self.lam), rtol=rtol, atol=0.0)
        return bool(ok)

    @property
    def x_avg(self) -> np.ndarray:
        if self.weight_sum <= 0:
            return self.x
        return self.x_sum / self.weight_sum

    @property
    def lam_avg(self) -> np.ndarray:
        if self.weight_sum <= 0:
            return self.lam
        return self.lam_sum / self.weight_sum

    def restarted_at(self, x: np.ndarray, lam: np.ndarray) -> "SaddleState":
        """Same iteration counter, iterate moved to (x, λ), averages cleared"""
        return SaddleState(x=np.array(x, copy=True), lam=np.array(lam, copy=True), k=self.k)


def _check_dimensions(p: LpProblem, st: SaddleState, pre: DiagPreconditioner):
    if st.x.shape != (p.n,) or st.lam.shape != (p.m,):
        raise ValueError(
            f"Iterate of size ({st.x.size}, {st.lam.size}) does not match "
            f"a problem with n={p.n}, m={p.m}"
        )
    pre.check_dimensions(p)


def evaluate_lagrangian(p: LpProblem, x: np.ndarray, lam: np.ndarray) -> float:
    """L(x, λ) = cᵀx − λᵀAx + bᵀλ

    Parameters:
        p: Standard-form problem
        x: Primal point
        lam: Dual point

    Returns:
        The Lagrangian value

    Raises:
        NumericalError: When an input or the value is not finite
    """
    x = np.asarray(x, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(lam))):
        raise NumericalError("Non-finite point passed to the Lagrangian")
    Ax = matvec(p.A, x)
    value = float(p.c @ x - lam @ Ax + p.b @ lam)
    if not np.isfinite(value):
        raise NumericalError("The Lagrangian evaluated to a non-finite value")
    return value


def pdhg_step(
    p: LpProblem,
    st: SaddleState,
    pre: DiagPreconditioner,
    eta: float = 1.0,
    omega: float = 1.0,
) -> SaddleState:
    """One preconditioned PDHG step with step size and primal weight

    Parameters:
        p: Standard-form problem
        st: Current state (x^k, λ^k)
        pre: Diagonal preconditioners (T_k, Σ_k)
        eta: Step size η > 0
        omega: Primal weight ω > 0

    Returns:
        The state (x^{k+1}, λ^{k+1}) with k incremented. Its `last_step`
        exposes the pre-projection point and the residuals of the step.

    Raises:
        ValueError: On dimension mismatch or non-positive η, ω
        NumericalError: When the new iterate is not finite
    """
    if not (eta > 0 and omega > 0):
        raise ValueError(f"Step size and primal weight must be positive, got {eta}, {omega}")
    _check_dimensions(p, st, pre)

    ATlam = st.ATlam(p)
    direction = p.c - ATlam
    x_half = st.x - (eta / omega) * (pre.tau * direction)
    x_next = np.maximum(x_half, 0.0)
    residual = p.b - matvec(p.A, 2.0 * x_next - st.x)
    lam_next = st.lam + (eta * omega) * (pre.sigma * residual)

    if not (np.all(np.isfinite(x_next)) and np.all(np.isfinite(lam_next))):
        raise NumericalError(f"Non-finite iterate at iteration {st.k + 1}")

    info = StepInfo(
        x_prev=st.x,
        lam_prev=st.lam,
        x_half=x_half,
        primal_direction=direction,
        extrapolated_residual=residual,
        ATlam_prev=ATlam,
        eta=float(eta),
        omega=float(omega),
        Ax_prev=st._Ax,
    )
    return SaddleState(
        x=x_next,
        lam=lam_next,
        k=st.k + 1,
        x_sum=st.x_sum + eta * x_next,
        lam_sum=st.lam_sum + eta * lam_next,
        weight_sum=st.weight_sum + eta,
        last_step=info,
        _ATlam=matvec_transpose(p.A, lam_next),
    )
