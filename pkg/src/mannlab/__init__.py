"""mannlab: a numerical laboratory for modified Mann iterations of
strict pseudocontractions in finite-dimensional smooth normed spaces.

The package certifies operators against the defining inequality of the
class, validates step-size schedules against relaxed and legacy
convergence conditions, runs the three-sequence iteration with
per-iterate proof diagnostics, and locates limit points through the
anchor path. A compiled recursion kernel is used when available, with a
bit-identical pure-Python fallback.
"""

from ._core import backend_name
from .iteration import (
    AnchorLimitResult,
    AnchorPath,
    IterationState,
    IterationTrace,
    StopRule,
    TauAnalysis,
    anchor_limit,
    anchor_solve,
    diagnostics,
    run,
    simulate_error_recursion,
    step,
    tau_analysis,
)
from .operators import (
    AveragedMap,
    Certificate,
    FixedPointSet,
    Operator,
    averaged,
    certify,
    check_averaged_contraction,
    fixed_points_oracle,
    gallery,
)
from .schedules import (
    ScheduleSet,
    Sequence,
    constant,
    find_start_index,
    harmonic,
    mu_bound,
    power,
    table,
    validate_legacy,
    validate_relaxed,
    validate_relaxed_q,
    zero,
)
from .spaces import (
    Space,
    dual_norm,
    euclidean,
    lp,
    modulus_smoothness_estimate,
    validate_smooth_constant,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorLimitResult", "AnchorPath", "AveragedMap", "Certificate",
    "FixedPointSet", "IterationState", "IterationTrace", "Operator",
    "ScheduleSet", "Sequence", "Space", "StopRule", "TauAnalysis",
    "anchor_limit", "anchor_solve", "averaged", "backend_name", "certify",
    "check_averaged_contraction", "constant", "diagnostics", "dual_norm",
    "euclidean", "find_start_index", "fixed_points_oracle", "gallery",
    "harmonic", "lp", "modulus_smoothness_estimate", "mu_bound", "power",
    "run", "simulate_error_recursion", "step", "table", "tau_analysis",
    "validate_legacy", "validate_relaxed", "validate_relaxed_q",
    "validate_smooth_constant", "zero",
]
