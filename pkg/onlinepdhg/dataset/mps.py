"""Reading and writing LP instances in MPS format

Both the fixed-column layout and the whitespace separated (free) layout are
understood. The result of parsing is a `GeneralLp`: rows with a sense and a
right-hand side, variables with lower and upper bounds. Turning it into the
standard form the solver works with is done by
`onlinepdhg.dataset.standard_form`.

Supported sections are NAME, OBJSENSE, ROWS, COLUMNS, RHS, RANGES, BOUNDS and
ENDATA. Integer markers inside COLUMNS are skipped, so MIP files are read as
their LP relaxation.
"""
import gzip
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from onlinepdhg.linalg.sparse import SparseMatrix

logger = logging.getLogger(__name__)

SECTIONS = (
    "NAME",
    "OBJSENSE",
    "ROWS",
    "COLUMNS",
    "RHS",
    "RANGES",
    "BOUNDS",
    "ENDATA",
)

# Fixed format field boundaries (0-based, end exclusive)
_FIXED_FIELDS = ((1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61))

_BOUNDS_WITH_VALUE = {"UP", "LO", "FX", "LI", "UI"}
_BOUNDS_WITHOUT_VALUE = {"FR", "MI", "PL", "BV"}
# Bound types that set the lower bound of a column
_LOWER_BOUND_KINDS = {"LO", "LI", "FX", "FR", "MI", "BV"}


class MPSFormatError(ValueError):
    """Raised when an MPS file cannot be parsed

    Parameters:
        message: What went wrong
        lineno: 1-based line number of the offending line
    """

    def __init__(self, message: str, lineno: Optional[int] = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class RowSense(str, Enum):
    LE = "L"
    EQ = "E"
    GE = "G"


@dataclass
class GeneralLp:
    """A linear program with row senses and variable bounds

        min (or max)  cᵀx + objective_offset
        s.t.          a_iᵀx (≤ | = | ≥) rhs_i
                      lower ≤ x ≤ upper

    The constraint matrix is kept as coordinate triplets with no repeated
    positions.
    """

    c: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    senses: List[RowSense]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    row_names: List[str] = field(default_factory=list)
    col_names: List[str] = field(default_factory=list)
    name: str = ""
    objective_offset: float = 0.0
    maximize: bool = False

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64)
        self.rhs = np.asarray(self.rhs, dtype=np.float64)
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.senses = [RowSense(s) for s in self.senses]

        m, n = len(self.senses), self.c.size
        if self.rhs.size != m:
            raise ValueError(f"{m} row senses but {self.rhs.size} right-hand sides")
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("Bounds do not match the number of variables")
        if not (self.rows.size == self.cols.size == self.values.size):
            raise ValueError("Triplet arrays have different lengths")
        if self.rows.size > 0 and (self.rows.max() >= m or self.cols.max() >= n):
            raise ValueError("Triplet index outside the constraint matrix")
        bad = np.where(self.lower > self.upper)[0]
        if bad.size > 0:
            j = int(bad[0])
            raise ValueError(
                f"Variable {self.column_name(j)} has lower bound {self.lower[j]} "
                f"above its upper bound {self.upper[j]}"
            )
        if not self.row_names:
            self.row_names = [f"R{i}" for i in range(m)]
        if not self.col_names:
            self.col_names = [f"C{j}" for j in range(n)]

    @property
    def m(self) -> int:
        return len(self.senses)

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def matrix(self) -> SparseMatrix:
        return SparseMatrix.from_triplets(
            self.rows, self.cols, self.values, (self.m, self.n)
        )

    def column_name(self, j: int) -> str:
        if j < len(self.col_names):
            return self.col_names[j]
        return f"C{j}"

    def objective(self, x: np.ndarray) -> float:
        """Objective value cᵀx + offset of an original-space point"""
        return float(self.c @ np.asarray(x, dtype=np.float64) + self.objective_offset)


class _MPSReader:
    """State machine consuming MPS lines section by section"""

    def __init__(self, fixed: bool = False):
        self.fixed = fixed
        self.section: Optional[str] = None
        self.name = ""
        self.maximize = False
        self.objective_row: Optional[str] = None
        self.free_rows = set()
        self.row_index: Dict[str, int] = {}
        self.row_senses: List[RowSense] = []
        self.col_index: Dict[str, int] = {}
        self.entries: Dict[Tuple[int, int], float] = {}
        self.objective: Dict[int, float] = {}
        self.rhs: Dict[int, float] = {}
        self.ranges: Dict[int, float] = {}
        self.bounds: Dict[int, List[float]] = {}
        self.explicit_lower = set()
        self.objective_offset = 0.0
        self.ended = False

    def _fields(self, line: str) -> List[str]:
        if not self.fixed:
            return line.split()
        padded = line.ljust(61)
        return [padded[a:b].strip() for a, b in _FIXED_FIELDS if padded[a:b].strip()]

    def _number(self, token: str, lineno: int) -> float:
        try:
            return float(token)
        except ValueError:
            raise MPSFormatError(f"invalid number {token!r}", lineno)

    def _row(self, name: str, lineno: int) -> Optional[int]:
        """Index of a constraint row, None for objective or free rows"""
        if name == self.objective_row or name in self.free_rows:
            return None
        if name not in self.row_index:
            raise MPSFormatError(f"reference to undeclared row {name!r}", lineno)
        return self.row_index[name]

    def _column(self, name: str, lineno: int) -> int:
        if name not in self.col_index:
            raise MPSFormatError(f"reference to undeclared column {name!r}", lineno)
        return self.col_index[name]

    def header(self, line: str, lineno: int):
        tokens = line.split()
        keyword = tokens[0].upper()
        if keyword not in SECTIONS:
            raise MPSFormatError(f"malformed section header {line.strip()!r}", lineno)
        self.section = keyword
        if keyword == "NAME":
            self.name = " ".join(tokens[1:])
        elif keyword == "OBJSENSE" and len(tokens) > 1:
            self._objsense(tokens[1], lineno)
        elif keyword == "ENDATA":
            self.ended = True

    def _objsense(self, token: str, lineno: int):
        token = token.upper()
        if token in ("MAX", "MAXIMIZE"):
            self.maximize = True
        elif token in ("MIN", "MINIMIZE"):
            self.maximize = False
        else:
            raise MPSFormatError(f"invalid objective sense {token!r}", lineno)

    def data(self, line: str, lineno: int):
        if self.section is None:
            raise MPSFormatError("data line before any section header", lineno)
        tokens = self._fields(line)
        if not tokens:
            return
        handler = getattr(self, f"_section_{self.section.lower()}")
        handler(tokens, lineno)

    def _section_name(self, tokens: List[str], lineno: int):
        self.name = " ".join(tokens)

    def _section_objsense(self, tokens: List[str], lineno: int):
        self._objsense(tokens[0], lineno)

    def _section_rows(self, tokens: List[str], lineno: int):
        if len(tokens) < 2:
            raise MPSFormatError("ROWS entry needs a sense and a name", lineno)
        sense, name = tokens[0].upper(), tokens[1]
        if name in self.row_index or name == self.objective_row:
            raise MPSFormatError(f"row {name!r} declared twice", lineno)
        if sense == "N":
            if self.objective_row is None:
                self.objective_row = name
            else:
                self.free_rows.add(name)
            return
        if sense not in ("L", "E", "G"):
            raise MPSFormatError(f"invalid row sense {sense!r}", lineno)
        self.row_index[name] = len(self.row_senses)
        self.row_senses.append(RowSense(sense))

    def _section_columns(self, tokens: List[str], lineno: int):
        if "'MARKER'" in tokens:
            return
        if len(tokens) < 3 or len(tokens) % 2 == 0:
            raise MPSFormatError("COLUMNS entry needs a column and (row, value) pairs", lineno)
        col = self.col_index.setdefault(tokens[0], len(self.col_index))
        for row_name, value in zip(tokens[1::2], tokens[2::2]):
            value = self._number(value, lineno)
            if row_name == self.objective_row:
                self.objective[col] = self.objective.get(col, 0.0) + value
                continue
            row = self._row(row_name, lineno)
            if row is None:
                continue
            self.entries[(row, col)] = self.entries.get((row, col), 0.0) + value

    def _pairs(self, tokens: List[str], lineno: int) -> List[Tuple[str, float]]:
        # An optional set name comes first
        if len(tokens) % 2 == 1:
            tokens = tokens[1:]
        if not tokens:
            raise MPSFormatError("entry without (row, value) pairs", lineno)
        return [
            (row_name, self._number(value, lineno))
            for row_name, value in zip(tokens[0::2], tokens[1::2])
        ]

    def _section_rhs(self, tokens: List[str], lineno: int):
        for row_name, value in self._pairs(tokens, lineno):
            if row_name == self.objective_row:
                self.objective_offset = -value
                continue
            row = self._row(row_name, lineno)
            if row is not None:
                self.rhs[row] = value

    def _section_ranges(self, tokens: List[str], lineno: int):
        for row_name, value in self._pairs(tokens, lineno):
            row = self._row(row_name, lineno)
            if row is None:
                raise MPSFormatError(f"range on objective row {row_name!r}", lineno)
            self.ranges[row] = value

    def _section_bounds(self, tokens: List[str], lineno: int):
        kind = tokens[0].upper()
        if kind in _BOUNDS_WITH_VALUE:
            if len(tokens) == 4:
                col_name, value = tokens[2], tokens[3]
            elif len(tokens) == 3:
                col_name, value = tokens[1], tokens[2]
            else:
                raise MPSFormatError(f"malformed {kind} bound", lineno)
            value = self._number(value, lineno)
        elif kind in _BOUNDS_WITHOUT_VALUE:
            if len(tokens) == 4:
                col_name = tokens[2]
            elif len(tokens) == 3:
                col_name = tokens[2] if tokens[2] in self.col_index else tokens[1]
            elif len(tokens) == 2:
                col_name = tokens[1]
            else:
                raise MPSFormatError(f"malformed {kind} bound", lineno)
            value = None
        else:
            raise MPSFormatError(f"unsupported bound type {kind!r}", lineno)

        col = self._column(col_name, lineno)
        bound = self.bounds.setdefault(col, [0.0, np.inf])
        if kind in _LOWER_BOUND_KINDS:
            self.explicit_lower.add(col)
        if kind in ("UP", "UI"):
            if value < 0 and bound[0] == 0.0 and col not in self.explicit_lower:
                logger.warning(
                    f"Negative upper bound on {col_name} with zero lower bound, "
                    "setting the lower bound to -inf"
                )
                bound[0] = -np.inf
            bound[1] = value
        elif kind in ("LO", "LI"):
            bound[0] = value
        elif kind == "FX":
            bound[0] = bound[1] = value
        elif kind == "FR":
            bound[0], bound[1] = -np.inf, np.inf
        elif kind == "MI":
            bound[0] = -np.inf
        elif kind == "PL":
            bound[1] = np.inf
        elif kind == "BV":
            bound[0], bound[1] = 0.0, 1.0

    def build(self) -> GeneralLp:
        if not self.ended:
            logger.warning("MPS input ended without ENDATA")

        m, n = len(self.row_senses), len(self.col_index)
        senses = list(self.row_senses)
        rhs = np.zeros(m)
        for row, value in self.rhs.items():
            rhs[row] = value
        row_names = [None] * m
        for name, i in self.row_index.items():
            row_names[i] = name
        col_names = [None] * n
        for name, j in self.col_index.items():
            col_names[j] = name

        c = np.zeros(n)
        for col, value in self.objective.items():
            c[col] = value
        lower = np.zeros(n)
        upper = np.full(n, np.inf)
        for col, (lo, up) in self.bounds.items():
            lower[col], upper[col] = lo, up

        entries = {k: v for k, v in self.entries.items() if v != 0.0}
        rows = [r for r, _ in entries.keys()]
        cols = [c_ for _, c_ in entries.keys()]
        values = list(entries.values())

        # A ranged row becomes a ≥ row on the low end plus a new ≤ row on the
        # high end carrying the same coefficients.
        for row in sorted(self.ranges):
            r = self.ranges[row]
            sense = senses[row]
            if sense == RowSense.EQ:
                low, high = (rhs[row], rhs[row] + r) if r >= 0 else (rhs[row] + r, rhs[row])
            elif sense == RowSense.LE:
                low, high = rhs[row] - abs(r), rhs[row]
            else:
                low, high = rhs[row], rhs[row] + abs(r)
            if low == high:
                continue
            senses[row] = RowSense.GE
            rhs[row] = low
            new_row = len(senses)
            senses.append(RowSense.LE)
            rhs = np.append(rhs, high)
            row_names.append(f"{row_names[row]}_range")
            for (i, j), v in entries.items():
                if i == row:
                    rows.append(new_row)
                    cols.append(j)
                    values.append(v)

        return GeneralLp(
            c=c,
            rows=np.asarray(rows, dtype=np.int64),
            cols=np.asarray(cols, dtype=np.int64),
            values=np.asarray(values, dtype=np.float64),
            senses=senses,
            rhs=rhs,
            lower=lower,
            upper=upper,
            row_names=row_names,
            col_names=col_names,
            name=self.name,
            objective_offset=self.objective_offset,
            maximize=self.maximize,
        )


def parse_mps(text: Union[str, Iterable[str]], fixed: bool = False) -> GeneralLp:
    """Parse an MPS document

    Example:
        ```
        lp = parse_mps(open("afiro.mps"))
        lp.m, lp.n
        ```

    Parameters:
        text: Whole document as a string, or an iterable of lines
        fixed: Read data lines by column position instead of splitting on
            whitespace. Only needed for fixed-format files whose names
            contain spaces.

    Returns:
        The parsed problem

    Raises:
        MPSFormatError: On malformed headers, undeclared rows or columns and
            unparsable values
    """
    if isinstance(text, str):
        text = text.splitlines()
    reader = _MPSReader(fixed=fixed)
    for lineno, line in enumerate(text, start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        if reader.ended:
            break
        if line[0].isspace():
            reader.data(line, lineno)
        else:
            reader.header(line, lineno)
    return reader.build()


def read_mps(path: Union[str, Path], fixed: bool = False) -> GeneralLp:
    """Read an `.mps` or gzip compressed `.mps.gz` file

    Parameters:
        path: File to read
        fixed: See `parse_mps`

    Returns:
        The parsed problem
    """
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    logger.debug(f"Reading {path}")
    with opener(path, "rt") as file:
        lp = parse_mps(file, fixed=fixed)
    if not lp.name:
        lp.name = path.name.split(".")[0]
    return lp


def _format(value: float) -> str:
    return repr(float(value))


def write_mps(lp: GeneralLp) -> str:
    """Serialize a problem in free MPS format

    Ranged rows are written as the two rows they were expanded into, so
    parsing the output gives back the same `GeneralLp`.

    Parameters:
        lp: The problem

    Returns:
        The MPS document
    """
    objective_row = "OBJ"
    while objective_row in lp.row_names:
        objective_row += "_"

    lines = [f"NAME {lp.name}".rstrip()]
    if lp.maximize:
        lines += ["OBJSENSE", "    MAX"]
    lines.append("ROWS")
    lines.append(f" N  {objective_row}")
    for sense, name in zip(lp.senses, lp.row_names):
        lines.append(f" {sense.value}  {name}")

    lines.append("COLUMNS")
    A = lp.matrix.csr.tocsc()
    for j, col_name in enumerate(lp.col_names):
        if lp.c[j] != 0.0:
            lines.append(f"    {col_name}  {objective_row}  {_format(lp.c[j])}")
        for k in range(A.indptr[j], A.indptr[j + 1]):
            lines.append(f"    {col_name}  {lp.row_names[A.indices[k]]}  {_format(A.data[k])}")
        if lp.c[j] == 0.0 and A.indptr[j] == A.indptr[j + 1]:
            # Keep empty columns declared
            lines.append(f"    {col_name}  {objective_row}  0.0")

    lines.append("RHS")
    if lp.objective_offset != 0.0:
        lines.append(f"    RHS  {objective_row}  {_format(-lp.objective_offset)}")
    for name, value in zip(lp.row_names, lp.rhs):
        if value != 0.0:
            lines.append(f"    RHS  {name}  {_format(value)}")

    lines.append("BOUNDS")
    for name, lo, up in zip(lp.col_names, lp.lower, lp.upper):
        if lo == up:
            lines.append(f" FX BND  {name}  {_format(lo)}")
            continue
        if np.isneginf(lo) and np.isposinf(up):
            lines.append(f" FR BND  {name}")
            continue
        if np.isneginf(lo):
            lines.append(f" MI BND  {name}")
        elif lo != 0.0:
            lines.append(f" LO BND  {name}  {_format(lo)}")
        if np.isfinite(up):
            lines.append(f" UP BND  {name}  {_format(up)}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"
