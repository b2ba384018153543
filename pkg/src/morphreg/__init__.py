"""2D diffeomorphic and metamorphic image registration by geodesic shooting."""

__version__ = "0.1.0"

from .fields import (
    FieldError,
    GridGeometry,
    SampleGrid,
    ScalarField,
    VectorField,
    divergence,
    dot,
    gradient,
    interpolate,
    interpolate_vec,
    ssd,
)
from .integrator import (
    GeodesicState,
    GeodesicTrajectory,
    IntegrationDiverged,
    Scheme,
    ShootingConfig,
    path_energy,
    shoot,
    shoot_lddmm,
    velocity_from_momentum,
)
from .kernel import GaussianKernel, smooth_scalar, smooth_vector, v_norm_sq
from .objective import CostReport, RegistrationProblem, cost, grad
from .optimizer import (
    OptimizeConfig,
    OptimizeResult,
    Termination,
    default_init,
    optimize,
)
from .synthetic import (
    PRESETS,
    ShapeKind,
    ShapeSpec,
    preset_pair,
    render,
    smooth_random_field,
    smooth_random_vec,
)

__all__ = [
    "FieldError",
    "GridGeometry",
    "ScalarField",
    "VectorField",
    "SampleGrid",
    "gradient",
    "divergence",
    "interpolate",
    "interpolate_vec",
    "dot",
    "ssd",
    "GaussianKernel",
    "smooth_scalar",
    "smooth_vector",
    "v_norm_sq",
    "Scheme",
    "ShootingConfig",
    "GeodesicState",
    "GeodesicTrajectory",
    "IntegrationDiverged",
    "velocity_from_momentum",
    "shoot",
    "shoot_lddmm",
    "path_energy",
    "RegistrationProblem",
    "CostReport",
    "cost",
    "grad",
    "OptimizeConfig",
    "OptimizeResult",
    "Termination",
    "optimize",
    "default_init",
    "ShapeKind",
    "ShapeSpec",
    "render",
    "smooth_random_field",
    "smooth_random_vec",
    "preset_pair",
    "PRESETS",
]
