"""Canonical forms, classification and optimal W-state distillation for three qubits."""

from .canonical import (
    CanonicalForm,
    EntanglementClass,
    WCanonicalForm,
    canonicalize,
    classify,
    random_w_lambdas,
    tangle,
    three_tangle,
    w_canonical_state,
    w_canonicalize,
)
from .distill import (
    DistillationPlan,
    KReading,
    MaxResult,
    ProbabilityCurve,
    TargetKind,
    build_plan,
    curve_closed,
    curve_constructive,
    maximize,
    sample_curve,
    special_case_lambda1_zero,
)
from .errors import (
    ConstructionMismatch,
    DegenerateOperator,
    DegenerateState,
    DomainError,
    InvalidElement,
    NoRoot,
    NotWClass,
    OutOfRange,
    PreconditionError,
    WDistillError,
    ZeroBranch,
    ZeroVector,
)
from .optimality import (
    GeneralPovm,
    OptimalityReport,
    SplitTestRecord,
    oracle_max,
    reduce_general_povm,
    two_outcome_split_test,
)
from .state import (
    PovmTriple,
    ThreeQubitState,
    TriangularPovm,
    apply_local,
    make_state,
    povm_valid,
    random_local_unitary,
    random_state,
    random_triangular_povm,
    reduced_density,
)

__version__ = "0.1.0"
