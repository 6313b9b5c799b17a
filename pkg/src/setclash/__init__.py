"""Non-intersection certificates for closed sets and alternating projections."""

from ._backend import BACKEND
from .altproj import (
    APTrace,
    HolderParams,
    classify_termination,
    distance_decrease_bound,
    estimate_delta,
    pair_condition_lhs,
    run_ap,
    two_set_certificate,
    verify_decrease,
    verify_linear_rate,
)
from .conditions import (
    Collection,
    DualCertificate,
    PrimalCertificate,
    asymmetric_reduce,
    check_nonintersection,
    dual_certificate,
    holder_certificate,
    index_details,
    nonintersect_index,
    primal_certificate,
    stationarity_probe,
    verify_certificate,
)
from .core import DEFAULT_TOL, Gauge, ProductNorm, dual_product_norm_eval, gauge_eval_suite, product_norm_eval
from .errors import (
    DimensionError,
    DomainError,
    PreconditionError,
    SetclashError,
    UnsupportedMethodError,
    ValidationError,
)
from .sets import (
    AbsEpigraph,
    AffineSubspace,
    Ball,
    BallRestriction,
    Box,
    ClosedSet,
    FinitePointSet,
    Halfspace,
    Hyperplane,
    Polytope,
    Translate,
    dist,
    normal_cone_dist,
    product_normal_cone_check,
    project,
    set_from_dict,
)
from .varcalc import (
    MaxGapInstance,
    chain_rule_slope,
    ekeland_search,
    local_slope,
    maxgap_eval,
    maxgap_subdiff,
    nonlocal_slope,
)

__version__ = "0.1.0"
