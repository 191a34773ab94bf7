from onlinepdhg.dataset.mps import (
    GeneralLp,
    MPSFormatError,
    RowSense,
    parse_mps,
    read_mps,
    write_mps,
)
from onlinepdhg.dataset.standard_form import (
    LpProblem,
    VarMap,
    read_lp,
    recover_solution,
    to_standard_form,
)
