"""Random LP instances for tests and small benchmark manifests"""
import numpy as np
from onlinepdhg.dataset.standard_form import LpProblem
from onlinepdhg.linalg.sparse import SparseMatrix


def random_feasible_lp(
    m: int,
    n: int,
    seed: int = 0,
    density: float = 1.0,
) -> LpProblem:
    """Generate a feasible and bounded standard-form LP

    Feasibility comes from b = A x₀ with x₀ > 0; boundedness from a strictly
    dual feasible point, c = Aᵀy₀ + s₀ with s₀ > 0.

    Parameters:
        m: Number of rows
        n: Number of columns, n ≥ m
        seed: Seed of the random generator
        density: Fraction of entries kept in A (each row and column keeps at
            least one entry)

    Returns:
        The generated problem
    """
    if n < m:
        raise ValueError("A feasible random LP needs at least as many columns as rows")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    if density < 1.0:
        mask = rng.random((m, n)) < density
        mask[np.arange(m), rng.integers(0, n, size=m)] = True
        mask[rng.integers(0, m, size=n), np.arange(n)] = True
        A = A * mask
    x0 = rng.uniform(0.5, 2.0, size=n)
    y0 = rng.standard_normal(m)
    s0 = rng.uniform(0.1, 1.0, size=n)
    b = A @ x0
    c = A.T @ y0 + s0
    return LpProblem(c=c, b=b, A=SparseMatrix(A), name=f"random_{m}x{n}_{seed}")
