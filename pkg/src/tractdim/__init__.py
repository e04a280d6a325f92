"""tractdim: thermodynamic formalism numerics for logarithmic tract models.

Evaluates the doubly exponential tract model maps and their entire
approximations, transfer operators with controlled truncation tails,
topological pressure and its Bowen zero (hyperbolic dimension), and
box-counting dimension of escape-classified Julia sets.
"""

from .corefn import (
    DomainError,
    LiftStep,
    LogComplex,
    ModelParams,
    OVERFLOW_EXPONENT,
    log_abs_f,
    log_lift_step,
    log_phi_l_deriv,
    phi,
    principal_log,
    tau_inner,
)
from .tractgeom import (
    CalibratedConstants,
    CalibrationBudget,
    RadiusConfig,
    TractRegion,
    boundary_point,
    bundled_constants,
    calibrate,
    in_region,
    in_tract,
    load_constants,
    min_l_for_disjoint,
    save_constants,
)
from .cauchy import (
    ContourSpec,
    QuadResult,
    eval_entire,
    eval_entire_deriv,
    eval_entire_in_tract,
    quad_cauchy,
)
from .transferop import (
    GridFunction,
    GridOperator,
    TransferValue,
    apply_operator_grid,
    preimage_xi,
    tail_bound,
    transfer_entire,
    transfer_model,
)
from .pressure import (
    DimEstimate,
    PressureEstimate,
    bowen_zero,
    hypdim_sweep,
    pressure_estimate,
)
from .juliadim import (
    BoxCountReport,
    Classification,
    box_dimension,
    classify,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "BoxCountReport",
    "CalibratedConstants",
    "CalibrationBudget",
    "Classification",
    "ContourSpec",
    "DimEstimate",
    "DomainError",
    "GridFunction",
    "GridOperator",
    "LiftStep",
    "LogComplex",
    "ModelParams",
    "OVERFLOW_EXPONENT",
    "PressureEstimate",
    "QuadResult",
    "RadiusConfig",
    "TractRegion",
    "TransferValue",
    "apply_operator_grid",
    "boundary_point",
    "bowen_zero",
    "box_dimension",
    "bundled_constants",
    "calibrate",
    "classify",
    "eval_entire",
    "eval_entire_deriv",
    "eval_entire_in_tract",
    "hypdim_sweep",
    "in_region",
    "in_tract",
    "load_constants",
    "log_abs_f",
    "log_lift_step",
    "log_phi_l_deriv",
    "min_l_for_disjoint",
    "phi",
    "preimage_xi",
    "pressure_estimate",
    "principal_log",
    "quad_cauchy",
    "render",
    "save_constants",
    "tail_bound",
    "tau_inner",
    "transfer_entire",
    "transfer_model",
    "__version__",
]
