"""Two-scale discretisation of the Dirichlet Monge-Ampere problem on planar convex domains."""

from .barriers import InteriorBarrier, build_interior_barrier
from .convex import (
    ConvexEnvelopeResult,
    alexandroff_check,
    check_hyper_rectangle_bound,
    contact_second_difference_check,
    convex_envelope,
    subdifferential_measure,
)
from .directions import DirectionSet, OrthoTupleSet, build_direction_set, build_ortho_tuples
from .errors import (
    ContractError,
    DivergenceError,
    InternalConsistencyError,
    InvalidParameterError,
    MeshValidationError,
    NonConvergenceError,
    OutOfDomainError,
    TwoScaleError,
)
from .harness import (
    CouplingRule,
    RateReport,
    TestProblem,
    catalog,
    consistency_study,
    convergence_study,
    emit_report,
    read_report,
)
from .mesh import (
    DomainSpec,
    PointLocation,
    TriMesh,
    boundary_distance,
    classify_delta_interior,
    generate_mesh,
    locate_point,
    read_mesh,
    write_mesh,
)
from .operator import (
    OperatorContext,
    apply_T,
    apply_T_all,
    build_context,
    concavity_gap,
    is_discretely_convex,
    product_form_T,
)
from .pwl import NodalField, SecondDiffStencil, build_stencils, evaluate, interpolate, second_difference
from .solver import Problem, SolveReport, SolverConfig, initial_guess, node_solve, solve

__version__ = "0.1.0"

__all__ = [
    "InteriorBarrier",
    "build_interior_barrier",
    "ConvexEnvelopeResult",
    "alexandroff_check",
    "check_hyper_rectangle_bound",
    "contact_second_difference_check",
    "convex_envelope",
    "subdifferential_measure",
    "DirectionSet",
    "OrthoTupleSet",
    "build_direction_set",
    "build_ortho_tuples",
    "ContractError",
    "DivergenceError",
    "InternalConsistencyError",
    "InvalidParameterError",
    "MeshValidationError",
    "NonConvergenceError",
    "OutOfDomainError",
    "TwoScaleError",
    "CouplingRule",
    "RateReport",
    "TestProblem",
    "catalog",
    "consistency_study",
    "convergence_study",
    "emit_report",
    "read_report",
    "DomainSpec",
    "PointLocation",
    "TriMesh",
    "boundary_distance",
    "classify_delta_interior",
    "generate_mesh",
    "locate_point",
    "read_mesh",
    "write_mesh",
    "OperatorContext",
    "apply_T",
    "apply_T_all",
    "build_context",
    "concavity_gap",
    "is_discretely_convex",
    "product_form_T",
    "NodalField",
    "SecondDiffStencil",
    "build_stencils",
    "evaluate",
    "interpolate",
    "second_difference",
    "Problem",
    "SolveReport",
    "SolverConfig",
    "initial_guess",
    "node_solve",
    "solve",
]
