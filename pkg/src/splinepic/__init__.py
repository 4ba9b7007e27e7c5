"""splinepic: remeshing-free particle regularisation by spline projection."""

__version__ = "1.0.0"

from .errors import (
    ConfigurationError,
    ConvergenceFailure,
    DomainError,
    SplinepicError,
    StabilityViolation,
    UsageError,
)
from .grid import CartesianGrid, grid_from_spacing
from .integrators import TimeIntegrator, get_tableau
from .particles import ParticleField, ParticleLayout, ScenarioField, advect, init_particles
from .projection import (
    CgConfig,
    DiscreteOperator,
    assemble_exact,
    assemble_sampled,
    blob_function,
    conjugate_gradient,
    decay_profile,
    project_particles,
)
from .splines import SplineFunction, SplineSpace, error_norm, quasi_interpolate, spline_norm

__all__ = [
    "__version__",
    "CartesianGrid",
    "CgConfig",
    "ConfigurationError",
    "ConvergenceFailure",
    "DiscreteOperator",
    "DomainError",
    "ParticleField",
    "ParticleLayout",
    "ScenarioField",
    "SplinepicError",
    "SplineFunction",
    "SplineSpace",
    "StabilityViolation",
    "TimeIntegrator",
    "UsageError",
    "advect",
    "assemble_exact",
    "assemble_sampled",
    "blob_function",
    "conjugate_gradient",
    "decay_profile",
    "error_norm",
    "get_tableau",
    "grid_from_spacing",
    "init_particles",
    "project_particles",
    "quasi_interpolate",
    "spline_norm",
]
