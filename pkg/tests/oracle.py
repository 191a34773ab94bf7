"""Reference optimum of small standard-form LPs by vertex enumeration"""
from itertools import combinations
from typing import Optional, Tuple

import numpy as np
from onlinepdhg.dataset.standard_form import LpProblem


def vertex_optimum(p: LpProblem, tol: float = 1e-9) -> Optional[Tuple[float, np.ndarray]]:
    """Best basic feasible solution of a problem with full row rank

    Returns:
        (objective, x) or None when no basis is feasible
    """
    A = p.A.to_dense()
    m, n = A.shape
    best = None
    for basis in combinations(range(n), m):
        B = A[:, basis]
        if abs(np.linalg.det(B)) < 1e-10:
            continue
        x_basis = np.linalg.solve(B, p.b)
        if np.any(x_basis < -tol):
            continue
        x = np.zeros(n)
        x[list(basis)] = np.maximum(x_basis, 0.0)
        value = float(p.c @ x)
        if best is None or value < best[0]:
            best = (value, x)
    return best
