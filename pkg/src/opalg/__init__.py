"""opalg: finite-truncation certification of operator-algebra constructions.

Builds semilattice chains of idempotents, single generators, telescoping
diagonals with their unitizations and expectation maps, and a rank-one
embedding of summable sequences into products of matrix blocks -- and
certifies every identity, norm bound and inequality these constructions
obey, exactly where the statement is algebraic and numerically where it
is metric.
"""

__version__ = "0.1.0"

from .chains import (
    Chain,
    ChainSpec,
    NormEntry,
    SemilatticeReport,
    TruncationError,
    build_chain,
    chain_from_json,
    chain_to_json,
    norm_profile,
    verify_semilattice,
)
from .diagonals import (
    FiniteDiagonal,
    MbadReport,
    TensorElem,
    bimodule_commutator,
    build_delta,
    certify_expectation,
    certify_mbad,
    expectation_from_diagonal,
    expectation_norm_demo,
    flatten,
    full_matrix_diagonal,
    pi_map,
    skew_idempotent_diagonal,
    tensor_norm_bounds,
    tensor_norm_upper,
    unitize_diagonal,
)
from .embedding import (
    EmbeddedElement,
    RankOneFamily,
    SubsetFamily,
    TraceWeights,
    best_subset_sum,
    brute_force_best_subset,
    build_E,
    certify_E_family,
    certify_embedding_bounds,
    l1_trace_norm,
    make_trace,
    phi,
    phi_sup_norm,
    unit_circle_sweep_ratios,
)
from .generation import (
    GenerationCertificate,
    WeightSeq,
    certify_generation,
    orthogonal_generators,
    same_span,
    single_generator,
)
from .matrices import (
    DEFAULT_TOL,
    EXACT,
    CertificationError,
    DimensionError,
    Matrix,
    Tolerance,
    is_idempotent,
    op_norm,
    schatten1_norm,
    singular_values,
)

__all__ = [
    "__version__",
    "Matrix", "Tolerance", "EXACT", "DEFAULT_TOL",
    "op_norm", "schatten1_norm", "singular_values", "is_idempotent",
    "DimensionError", "CertificationError", "TruncationError",
    "ChainSpec", "Chain", "build_chain", "verify_semilattice", "norm_profile",
    "SemilatticeReport", "NormEntry", "chain_to_json", "chain_from_json",
    "WeightSeq", "GenerationCertificate", "orthogonal_generators",
    "single_generator", "certify_generation", "same_span",
    "TensorElem", "build_delta", "pi_map", "flatten", "bimodule_commutator",
    "tensor_norm_bounds", "tensor_norm_upper", "unitize_diagonal",
    "FiniteDiagonal", "MbadReport", "certify_mbad",
    "expectation_from_diagonal", "certify_expectation",
    "full_matrix_diagonal", "skew_idempotent_diagonal", "expectation_norm_demo",
    "RankOneFamily", "build_E", "certify_E_family",
    "SubsetFamily", "EmbeddedElement", "phi", "phi_sup_norm",
    "best_subset_sum", "brute_force_best_subset", "unit_circle_sweep_ratios",
    "TraceWeights", "make_trace", "l1_trace_norm", "certify_embedding_bounds",
]
