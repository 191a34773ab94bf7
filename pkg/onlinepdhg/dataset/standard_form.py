"""Reduction of a general LP to the standard form  min cᵀx  s.t.  Ax = b, x ≥ 0

The reduction applied to every variable x_j with bounds [l_j, u_j]:

- finite l_j: shifted, x_j = l_j + x'_j
- l_j = -inf and finite u_j: reflected, x_j = u_j - x'_j
- free: split, x_j = x⁺_j - x⁻_j
- finite on both sides: shifted, plus an extra row x'_j + s = u_j - l_j

and to every row:

- ≤ rows gain a slack column (+1), ≥ rows a surplus column (-1)

Columns of the original variables keep their position; split parts and
slacks are appended after them, and upper bound rows after the original
rows. A problem already in standard form is left untouched.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from onlinepdhg.dataset.mps import GeneralLp, RowSense, read_mps
from onlinepdhg.linalg.sparse import SparseMatrix

logger = logging.getLogger(__name__)


@dataclass
class LpProblem:
    """Standard form LP data

    Parameters:
        c: Cost vector, length n
        b: Right-hand side, length m
        A: Constraint matrix, m×n
        name: Optional instance name
    """

    c: np.ndarray
    b: np.ndarray
    A: SparseMatrix
    name: str = ""

    def __post_init__(self):
        if not isinstance(self.A, SparseMatrix):
            self.A = SparseMatrix(self.A)
        self.c = np.asarray(self.c, dtype=np.float64).reshape(-1)
        self.b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        m, n = self.A.shape
        if self.c.size != n:
            raise ValueError(f"Cost vector has length {self.c.size}, A has {n} columns")
        if self.b.size != m:
            raise ValueError(f"Right-hand side has length {self.b.size}, A has {m} rows")

    @property
    def m(self) -> int:
        return self.A.m

    @property
    def n(self) -> int:
        return self.A.n

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x)


class TransformKind(str, Enum):
    SHIFT = "shift"
    REFLECT = "reflect"
    SPLIT = "split"


@dataclass(frozen=True)
class VariableTransform:
    """How one original variable is read back from standard-form columns

    shift:   x = offset + x[column]
    reflect: x = offset - x[column]
    split:   x = x[column] - x[negative_column]
    """

    kind: TransformKind
    column: int
    offset: float = 0.0
    negative_column: Optional[int] = None
    upper_row: Optional[int] = None

    def recover(self, x_std: np.ndarray) -> float:
        if self.kind == TransformKind.SHIFT:
            return self.offset + x_std[self.column]
        if self.kind == TransformKind.REFLECT:
            return self.offset - x_std[self.column]
        return x_std[self.column] - x_std[self.negative_column]


@dataclass
class VarMap:
    """Map from the standard-form space back to the original variables

    The original objective value is
    `objective_sign * (c_stdᵀ x_std + objective_offset)`.
    """

    transforms: List[VariableTransform]
    n_std: int
    slack_columns: List[Optional[int]] = field(default_factory=list)
    objective_offset: float = 0.0
    objective_sign: float = 1.0

    @property
    def n_original(self) -> int:
        return len(self.transforms)

    def is_identity(self) -> bool:
        return (
            self.n_std == self.n_original
            and self.objective_offset == 0.0
            and self.objective_sign == 1.0
            and all(
                t.kind == TransformKind.SHIFT and t.offset == 0.0 and t.column == j
                for j, t in enumerate(self.transforms)
            )
        )

    def original_objective(self, standard_objective: float) -> float:
        return self.objective_sign * (standard_objective + self.objective_offset)


def to_standard_form(gp: GeneralLp) -> Tuple[LpProblem, VarMap]:
    """Reduce a general LP to standard form

    Parameters:
        gp: The problem read from an MPS file

    Returns:
        The standard-form problem and the map to recover original solutions

    Raises:
        ValueError: If some variable has a lower bound above its upper bound
    """
    bad = np.where(gp.lower > gp.upper)[0]
    if bad.size > 0:
        j = int(bad[0])
        raise ValueError(
            f"Infeasible bounds [{gp.lower[j]}, {gp.upper[j]}] on {gp.column_name(j)}"
        )

    sign = -1.0 if gp.maximize else 1.0
    m0, n0 = gp.m, gp.n
    c_orig = sign * gp.c

    rows: List[int] = list(gp.rows)
    cols: List[int] = list(gp.cols)
    values: List[float] = list(gp.values)
    b: List[float] = list(gp.rhs)
    c: List[float] = list(c_orig)
    offset = sign * gp.objective_offset

    column_entries = [[] for _ in range(n0)]
    for r, j, v in zip(gp.rows, gp.cols, gp.values):
        column_entries[j].append((r, v))

    def new_column(cost: float = 0.0) -> int:
        c.append(cost)
        return len(c) - 1

    def new_row(rhs: float) -> int:
        b.append(rhs)
        return len(b) - 1

    transforms: List[VariableTransform] = []
    value_index = {}
    for k, (r, j) in enumerate(zip(gp.rows, gp.cols)):
        value_index.setdefault(j, []).append(k)

    for j in range(n0):
        lo, up = gp.lower[j], gp.upper[j]
        if np.isfinite(lo):
            if lo != 0.0:
                for r, v in column_entries[j]:
                    b[r] -= v * lo
                offset += c_orig[j] * lo
            upper_row = None
            if np.isfinite(up):
                upper_row = new_row(up - lo)
                rows.append(upper_row)
                cols.append(j)
                values.append(1.0)
                slack = new_column()
                rows.append(upper_row)
                cols.append(slack)
                values.append(1.0)
            transforms.append(
                VariableTransform(TransformKind.SHIFT, j, offset=float(lo), upper_row=upper_row)
            )
        elif np.isfinite(up):
            for r, v in column_entries[j]:
                b[r] -= v * up
            offset += c_orig[j] * up
            c[j] = -c_orig[j]
            for k in value_index.get(j, []):
                values[k] = -values[k]
            transforms.append(VariableTransform(TransformKind.REFLECT, j, offset=float(up)))
        else:
            negative = new_column(-c_orig[j])
            for r, v in column_entries[j]:
                rows.append(r)
                cols.append(negative)
                values.append(-v)
            transforms.append(
                VariableTransform(TransformKind.SPLIT, j, negative_column=negative)
            )

    slack_columns: List[Optional[int]] = []
    for i, sense in enumerate(gp.senses):
        if sense == RowSense.EQ:
            slack_columns.append(None)
            continue
        slack = new_column()
        rows.append(i)
        cols.append(slack)
        values.append(1.0 if sense == RowSense.LE else -1.0)
        slack_columns.append(slack)

    m, n = len(b), len(c)
    A = SparseMatrix.from_triplets(rows, cols, values, (m, n))
    problem = LpProblem(c=np.asarray(c), b=np.asarray(b), A=A, name=gp.name)
    varmap = VarMap(
        transforms=transforms,
        n_std=n,
        slack_columns=slack_columns,
        objective_offset=float(offset),
        objective_sign=sign,
    )
    logger.debug(
        f"Standard form of {gp.name or 'problem'}: {m0}x{n0} -> {m}x{n}"
    )
    return problem, varmap


def recover_solution(varmap: VarMap, x_std: np.ndarray) -> np.ndarray:
    """Map a standard-form point back to the original variables

    Parameters:
        varmap: Map returned by `to_standard_form`
        x_std: Standard-form point

    Returns:
        The original-space point

    Raises:
        ValueError: If `x_std` does not have the standard-form dimension
    """
    x_std = np.asarray(x_std, dtype=np.float64)
    if x_std.shape != (varmap.n_std,):
        raise ValueError(
            f"Standard-form point has shape {x_std.shape}, expected ({varmap.n_std},)"
        )
    return np.array([t.recover(x_std) for t in varmap.transforms], dtype=np.float64)


def read_lp(path, fixed: bool = False) -> Tuple[LpProblem, VarMap]:
    """Read an MPS file (plain or gzipped) and reduce it to standard form

    Parameters:
        path: Path to the `.mps` or `.mps.gz` file
        fixed: Parse in fixed MPS format

    Returns:
        The standard-form problem and its map back to the file's variables
    """
    return to_standard_form(read_mps(path, fixed=fixed))
