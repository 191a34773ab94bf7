from onlinepdhg.preconditioning.static import (
    DiagPreconditioner,
    ScalingRecord,
    StaticPreconditioning,
    apply_scaling,
    l2_rescale,
    pock_chambolle,
    precondition,
    ruiz,
    safeguard_scalars,
)
