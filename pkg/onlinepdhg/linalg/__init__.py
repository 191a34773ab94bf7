from onlinepdhg.linalg.sparse import (
    SparseMatrix,
    axis_norms,
    estimate_spectral_norm,
    matvec,
    matvec_transpose,
)
