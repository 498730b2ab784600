"""Principal eigenpairs of positive operators by variable-shift Collatz-Wielandt
power iteration, with baseline iterations and convergence diagnostics."""

from .diagnostics import (
    OrderEstimate,
    emit_report,
    estimate_order,
    mesh_order,
    reference_eigenpair,
    report_from_json,
)
from .grid import GridDomain, StencilMatrix, assemble, l_shape, load_mask, unit_square
from .iteration import (
    Criterion,
    CWBounds,
    IterationState,
    SolverConfig,
    StoppingRule,
    Update,
    collatz_wielandt,
    evaluate_stop,
    fixed_shift_power,
    mu_matches_sup,
    plain_power,
    rayleigh_quotient_iteration,
    residual,
    variable_lambda_power,
)
from .operators import (
    DenseMatrix,
    InverseLaplacian,
    OperatorKind,
    PositiveLinearOperator,
    TridiagonalMatrix,
    apply,
    hilbert_matrix,
    load_matrix,
    random_tridiagonal,
    save_matrix,
    shifted_solve,
)
from .report import ConvergenceReport, StepRecord, StopReason

__version__ = "0.1.0"
