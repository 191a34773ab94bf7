"""Sparse constraint matrix and the kernels the iteration spends its time in

The matrix is stored twice: in CSR form for y = A x and in CSR form of the
transpose for y = Aᵀ λ. Both products are plain scipy sparse products, so the
summation order is fixed for a given matrix and results are reproducible.
"""
import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

NormKind = Union[str, float]

SPECTRAL_NORM_MAX_ITERS = 5000
SPECTRAL_NORM_TOL = 1e-4


class SparseMatrix:
    """Immutable m×n sparse matrix

    Duplicated entries are summed and explicit zeros are dropped on
    construction, so the stored pattern is exactly the set of nonzeros with
    strictly increasing column indices inside every row.

    Parameters:
        matrix: Anything scipy can turn into a sparse array (a dense array,
            a scipy sparse matrix or array)
        shape: Shape, required when `matrix` does not carry one
    """

    def __init__(self, matrix, shape: Optional[Tuple[int, int]] = None):
        if sp.issparse(matrix):
            csr = sp.csr_array(matrix, dtype=np.float64)
        else:
            dense = np.asarray(matrix, dtype=np.float64)
            if dense.ndim != 2:
                raise ValueError(f"A matrix must be 2-dimensional, got {dense.ndim}")
            csr = sp.csr_array(dense)
        if shape is not None and tuple(csr.shape) != tuple(shape):
            raise ValueError(f"Matrix has shape {csr.shape}, expected {tuple(shape)}")
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        self._csr = csr
        self._csr_t = sp.csr_array(csr.T)
        self._csr_t.sort_indices()

    @staticmethod
    def from_triplets(
        rows: Sequence[int],
        cols: Sequence[int],
        values: Sequence[float],
        shape: Tuple[int, int],
    ) -> "SparseMatrix":
        """Build a matrix from coordinate triplets, summing repeated positions

        Parameters:
            rows: Row index of every entry
            cols: Column index of every entry
            values: Value of every entry
            shape: (m, n)

        Raises:
            ValueError: When an index falls outside `shape`
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        m, n = shape
        if rows.size > 0:
            if rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n:
                raise ValueError(f"Triplet index outside a {m}x{n} matrix")
        coo = sp.coo_array((values, (rows, cols)), shape=(m, n))
        return SparseMatrix(coo)

    @property
    def shape(self) -> Tuple[int, int]:
        return tuple(self._csr.shape)

    @property
    def m(self) -> int:
        return self._csr.shape[0]

    @property
    def n(self) -> int:
        return self._csr.shape[1]

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    @property
    def csr(self) -> sp.csr_array:
        return self._csr

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self._csr_t)

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def scale(self, row_scale: np.ndarray, col_scale: np.ndarray) -> "SparseMatrix":
        """Return Diag(row_scale) · A · Diag(col_scale)"""
        row_scale = np.asarray(row_scale, dtype=np.float64)
        col_scale = np.asarray(col_scale, dtype=np.float64)
        if row_scale.shape != (self.m,) or col_scale.shape != (self.n,):
            raise ValueError(
                f"Scalings of length ({row_scale.size}, {col_scale.size}) "
                f"do not match a {self.m}x{self.n} matrix"
            )
        coo = self._csr.tocoo()
        data = coo.data * row_scale[coo.row] * col_scale[coo.col]
        return SparseMatrix(sp.coo_array((data, (coo.row, coo.col)), shape=self.shape))

    def __repr__(self) -> str:
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"


def _check_length(v: np.ndarray, expected: int, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (expected,):
        raise ValueError(f"{what} has shape {v.shape}, expected ({expected},)")
    return v


def matvec(A: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """Compute A x

    Parameters:
        A: The matrix
        x: Vector of length n

    Returns:
        Vector of length m
    """
    x = _check_length(x, A.n, "x")
    return A.csr @ x


def matvec_transpose(A: SparseMatrix, lam: np.ndarray) -> np.ndarray:
    """Compute Aᵀ λ

    Parameters:
        A: The matrix
        lam: Vector of length m

    Returns:
        Vector of length n
    """
    lam = _check_length(lam, A.m, "lam")
    return A._csr_t @ lam


def axis_norms(A: SparseMatrix, axis: str, kind: NormKind = "inf") -> np.ndarray:
    """Per-row or per-column norms of A

    Parameters:
        A: The matrix
        axis: 'rows' or 'cols'
        kind: 'inf', 'l2', or a number p. For a number the raw power sum
            Σ|A_ij|^p over the stored nonzeros is returned, without taking
            the p-th root.

    Returns:
        Vector of length m (rows) or n (cols); empty rows/columns give 0
    """
    if axis == "rows":
        M = A.csr
    elif axis == "cols":
        M = A._csr_t
    else:
        raise ValueError(f"Invalid axis {axis!r}, expected 'rows' or 'cols'")

    size = M.shape[0]
    absdata = np.abs(M.data)
    counts = np.diff(M.indptr)
    owner = np.repeat(np.arange(size), counts)

    if kind == "inf":
        out = np.zeros(size)
        np.maximum.at(out, owner, absdata)
        return out
    if kind == "l2":
        return np.sqrt(np.bincount(owner, weights=absdata ** 2, minlength=size))
    if isinstance(kind, str):
        raise ValueError(f"Invalid norm kind {kind!r}")
    p = float(kind)
    return np.bincount(owner, weights=absdata ** p, minlength=size).astype(np.float64)


def estimate_spectral_norm(
    A: SparseMatrix,
    max_iters: int = SPECTRAL_NORM_MAX_ITERS,
    tol: float = SPECTRAL_NORM_TOL,
) -> float:
    """Estimate ‖A‖₂ by power iteration on AᵀA

    The iteration starts from the normalised all-ones vector so the result is
    reproducible. It stops when the relative change of the estimate drops
    below `tol` or after `max_iters` iterations. The returned value is
    ‖A v‖ for a unit v, hence never above the true norm.

    Parameters:
        A: The matrix
        max_iters: Iteration budget, at least 1
        tol: Relative change that stops the iteration

    Returns:
        The estimate, 0 for a zero matrix
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    if A.nnz == 0 or A.n == 0:
        return 0.0

    v = np.ones(A.n) / np.sqrt(A.n)
    estimate = 0.0
    for _ in range(max_iters):
        Av = matvec(A, v)
        new_estimate = float(np.linalg.norm(Av))
        w = matvec_transpose(A, Av)
        wnorm = np.linalg.norm(w)
        if wnorm == 0.0:
            # The seed is in the null space of A; the deterministic fallback
            # is the basis vector of the heaviest column.
            col = int(np.argmax(axis_norms(A, "cols", "l2")))
            v = np.zeros(A.n)
            v[col] = 1.0
            estimate = max(estimate, new_estimate)
            continue
        v = w / wnorm
        if new_estimate > 0 and abs(new_estimate - estimate) <= tol * new_estimate:
            estimate = new_estimate
            break
        estimate = new_estimate
    return float(np.linalg.norm(matvec(A, v)))
