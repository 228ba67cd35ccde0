"""Willmore energy, conformal dilations and the canonical family of surfaces in S^3."""

from __future__ import annotations

from ._accel import backend, set_backend
from .conformal import (
    ConformalParameter,
    TubeContext,
    apply_F,
    area_drop_integral,
    conformal_factor,
    default_eps,
    lambda_coord,
    pushforward_curvature,
    pushforward_normal,
    retraction_T,
    transform_mesh,
)
from .errors import (
    AmbiguousCenterError,
    DegenerateImageError,
    InconsistentCurvatureError,
    InvalidInputError,
    OptimizerStallError,
    OutOfTubeError,
    PoleError,
    SelfIntersectionError,
    UnderdeterminedFitError,
    WillmoreLabError,
)
from .family import (
    BlowupApproach,
    FamilyPoint,
    RegionSample,
    area_upper_bound,
    blowup_residual,
    degree_gauss_map,
    extended_gauss,
    jacobian_psi,
    mass_concentration,
    p_map,
    rbar,
    region_volume,
    signed_distance,
    verify_ros_inequality,
)
from .s3 import GeodesicBall, SpherePoint, TangentVector, exp_point, geodesic_distance, uniform_sample_s3
from .surface import (
    SurfaceMesh,
    estimate_curvatures,
    make_clifford_torus,
    make_flat_torus,
    make_geodesic_sphere,
    make_revolution_torus,
    read_s3mesh,
    write_s3mesh,
)
from .willmore import OptimizerConfig, optimize_willmore, willmore_energy

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
