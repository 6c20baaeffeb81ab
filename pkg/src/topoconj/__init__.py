"""Topological conjugacies between interval homeomorphisms.

Detect and classify fixed points of monotone interval maps, build
conjugacies h with g∘h = h∘f from fundamental-domain seeds, verify them
numerically, and classify one-parameter families against the fold,
transcritical, pitchfork and flip normal forms.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AllSamplesExcludedError,
    ConjugacyError,
    DomainError,
    EvaluationError,
    GridTooCoarseError,
    HypothesisError,
    NonMonotoneError,
    OrbitEscapeError,
    ParseError,
    SignatureMismatchError,
    UnpairedPeriodTwoError,
)
from .expr import MapExpr, parse_expression  # noqa: E402
from .maps import Interval, MonotoneMap, Orientation, make_map, reflect, inverse_map  # noqa: E402
from .fixed_points import (  # noqa: E402
    FixedPoint,
    FixedPointKind,
    PeriodTwoOrbit,
    SideBehavior,
    StabilitySignature,
    classify_fixed_point,
    find_fixed_points,
    find_period2,
    signature,
)
from .conjugacy import (  # noqa: E402
    Anchor,
    ConjugacyMap,
    FundamentalSeed,
    SegmentConjugacy,
    SegmentSide,
    build_between,
    build_flip,
    build_full,
    build_one_sided,
    evaluate_h,
    evaluate_h_inverse,
    seed_cubic,
    seed_linear,
)
from .verify import ResidualReport, monotonicity_check, orbit_check, residual_report  # noqa: E402
from .bifurcations import (  # noqa: E402
    BifurcationReport,
    BifurcationType,
    Family,
    NormalForm,
    classify_family,
    conjugate_to_normal_form,
    normal_form,
)
