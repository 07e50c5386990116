"""Verification toolkit for optimistic bilevel programs.

Exact polyhedral normal-cone calculus, symbolic derivatives, stationarity
certificates with a per-branch qualification check, and brute-force oracles
that independently confirm every exact result.
"""

from .calculus import (
    DerivativeBundle,
    central_fd,
    coderivative_smooth,
    derivative_bundle,
    hessian_symmetry_defect,
    scalarized_subdifferential,
    singular_subdifferential_smooth,
    verify_bundle_fd,
)
from .config import DEFAULT_FD, DEFAULT_TOLERANCES, FDConfig, Tolerances
from .cones import (
    ConeUnion,
    PolyhedralCone,
    cone_contains,
    cone_product,
    limiting_normal_cone_gph_box,
    limiting_normal_cone_gph_polyhedron,
    normal_cone_box,
    normal_cone_polyhedron,
)
from .errors import (
    BilevelCertError,
    BranchCapExceededError,
    DimensionError,
    EmptyGridError,
    EvaluationDomainError,
    ExactArithmeticError,
    GraphMembershipError,
    NonFiniteResultError,
    ParseError,
    PivotLimitError,
    PointNotInSetError,
    SchemaError,
    StaleCertificateError,
    TooFewSamplesError,
    ValidationError,
)
from .expr import SmoothFunction, differentiate, evaluate, parse, to_text
from .model import (
    BilevelProblem,
    BoxSet,
    Candidate,
    MpecProblem,
    MStationarityCertificate,
    Polyhedron,
    QualificationReport,
    make_candidate,
    mpec_candidate,
    to_mpec,
    validate,
)
from .oracle import (
    GridSpec,
    LocalOptimalityVerdict,
    estimate_calmness,
    estimate_lipschitz_like,
    phi0,
    sample_frechet_coderivative,
    sample_frechet_normal_cone,
    sample_limiting_normal_cone,
    solve_lower_grid,
    verify_optimistic_local,
)
from .problem_io import TOOL_NAME, TOOL_VERSION, load_problem
from .stationarity import (
    NOT_STATIONARY,
    STATIONARY,
    check_m_stationarity,
    check_mpec_stationarity,
    check_qualification,
    describe_branch,
    explain_certificate,
    graph_cone_union,
)

__version__ = TOOL_VERSION
