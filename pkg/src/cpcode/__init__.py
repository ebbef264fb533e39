"""Cross-parity convolutional coding for straggler-resilient distributed
matrix-vector multiplication, with a peeling decoder, an in-process worker
simulator and a Reed-Solomon style baseline."""

from .codes import (
    CodeParams,
    PolyMatrix,
    build_generator,
    build_parity_check,
    coefficient_report,
    column_spans,
    max_column_span,
    parity_block,
    parity_entry_closed_form,
    verify_orthogonality,
)
from .laurent import D, ONE, ZERO, LaurentPoly, NotDivisible
from .peeling import (
    DecodeTrace,
    IncompleteDecode,
    NotPeelable,
    SymbolGrid,
    assemble_product,
    decode,
    intersection_offset,
    line_points,
    peel_step,
    phase_recovery_count,
)
from .planner import (
    BadDelta,
    InfeasibleBudget,
    JobPlan,
    StorageBudget,
    Task,
    build_plan,
    choose_block_count,
    materialize,
    sparsity_report,
    validate_storage,
    verify_plan,
)
from .rs import RSConfig, condition_number, rs_decode, rs_encode
from .simulator import (
    NoiseModel,
    StragglerPolicy,
    UnrecoverablePattern,
    bandwidth_for_sparsity,
    error_percentage,
    random_banded,
    run,
    run_cp,
    run_rs,
    sparse_matvec,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
