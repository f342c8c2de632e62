"""Speed-rescaled dynamical balls, reparametrized orbit matching, and
local entropy estimation for flows with rest points."""

from ._kernels import BACKEND as kernel_backend
from ._kernels import HAVE_COMPILED as have_compiled_kernels
from .balls import (
    BallQuery,
    BallVariant,
    InsufficientHorizonError,
    MatchResult,
    b1_member,
    gamma_member,
    member_horizon_batch,
    monotone_member,
    slope_member,
)
from .constants import (
    FlowboxChart,
    FlowConstants,
    almost_identity_epsilon,
    build_flowbox,
    calibrate_delta,
    estimate_constants,
    estimate_lipschitz,
    estimate_separation,
    estimate_speed_ratio_c,
    estimate_t0,
)
from .entropy import (
    ConsistencyReport,
    ConsistencyStatus,
    EntropyEstimate,
    ExpansivenessMode,
    ExpansivenessVerdict,
    Verdict,
    brin_katok_estimate,
    estimate_from_mass_tables,
    expansiveness_test,
    theorem13_consistency,
)
from .geometry import EuclideanBox, FlatTorus, GluedCylinder
from .measures import (
    BallMass,
    DecayCurve,
    EmpiricalMeasure,
    ball_mass,
    decay_curve,
    iid_measure,
    orbit_measure,
)
from .reparam import (
    NonMonotoneAnchors,
    PiecewiseLinearReparam,
    ReparamClass,
    boost_to_monotone,
    classify,
    compose,
    invert,
    linearize_blocks,
)
from .systems import (
    Direction,
    EscapeError,
    FlowSystem,
    SingularCenterError,
    Trajectory,
    UnknownSystemError,
    integrate,
    make_builtin,
    min_speed_on,
)

__version__ = "0.1.0"
