"""Numerical toolkit for invariant projections in normalized-trace matrix algebras.

Capabilities: exact and approximate invariant-projection flags with
prescribed traces, trace-norm compression onto operators carrying a full
dyadic invariant flag, commutator- and invariance-defect minimization over
fixed-rank projections, and invariant-subspace lattice isomorphisms under
intertwining.
"""

from .errors import (
    BudgetError,
    ConvergenceError,
    FlagValidationError,
    GradientCheckError,
    LatticeError,
    PipelineError,
    SpectrumGapError,
    StageError,
    TracialError,
)
from .kernel import (
    CMatrix,
    DEFAULT_RANK_TOL,
    OrthoProjection,
    SchurDecomposition,
    SingularDecomposition,
    invariance_defect,
    kernel_projection,
    normalized_trace,
    operator_norm,
    projection_from_basis,
    range_projection,
    schur,
    svd,
    trace_norm2,
)
from .flags import (
    FLAG_RESIDUAL_TOL,
    Flag,
    FlagReport,
    dyadic_targets,
    schur_flag,
    validate_flag,
)
from .compress import (
    CompressionReport,
    CompressionStep,
    ParameterSchedule,
    dyadic_compress,
    half_step,
    membership_check,
    optimizer_supplier,
    schur_supplier,
    spectral_truncate,
)
from .grassmann import (
    DistanceResult,
    IsometryPoint,
    OptimizerConfig,
    brute_force_distance,
    gradient_check,
    jordan_upper_bound,
    minimize,
    objective_value,
)
from .lattice import (
    InvariantLattice,
    LatticeMap,
    enumerate_lattice,
    hyperinvariant_indices,
    range_of_compression,
    rank_identity_check,
    st_ts_isomorphism,
    sublattice_embedding,
)
from .harness import (
    ExperimentSpec,
    FAMILIES,
    OUT_OF_SCOPE,
    RunRecord,
    compress_bench,
    gamma_probe,
    generate,
    records_to_csv,
    records_to_obj,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "CMatrix",
    "CompressionReport",
    "CompressionStep",
    "ConvergenceError",
    "DEFAULT_RANK_TOL",
    "DistanceResult",
    "ExperimentSpec",
    "FAMILIES",
    "FLAG_RESIDUAL_TOL",
    "Flag",
    "FlagReport",
    "FlagValidationError",
    "GradientCheckError",
    "InvariantLattice",
    "IsometryPoint",
    "LatticeError",
    "LatticeMap",
    "OptimizerConfig",
    "OrthoProjection",
    "OUT_OF_SCOPE",
    "ParameterSchedule",
    "PipelineError",
    "RunRecord",
    "SchurDecomposition",
    "SingularDecomposition",
    "SpectrumGapError",
    "StageError",
    "TracialError",
    "brute_force_distance",
    "compress_bench",
    "dyadic_compress",
    "dyadic_targets",
    "enumerate_lattice",
    "gamma_probe",
    "generate",
    "gradient_check",
    "half_step",
    "hyperinvariant_indices",
    "invariance_defect",
    "jordan_upper_bound",
    "kernel_projection",
    "membership_check",
    "minimize",
    "normalized_trace",
    "objective_value",
    "operator_norm",
    "optimizer_supplier",
    "projection_from_basis",
    "range_of_compression",
    "range_projection",
    "rank_identity_check",
    "records_to_csv",
    "records_to_obj",
    "schur",
    "schur_flag",
    "schur_supplier",
    "spectral_truncate",
    "st_ts_isomorphism",
    "sublattice_embedding",
    "svd",
    "trace_norm2",
    "validate_flag",
]
