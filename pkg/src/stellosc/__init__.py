"""Numerical verification engine for time-harmonic stellar oscillations."""

__version__ = "0.1.0"

from .background import (
    BackgroundModel,
    CoefficientSample,
    ValidationReport,
    derived_coefficients,
    load_model,
    validate_assumptions,
)
from .calculus import (
    QuadratureRule,
    ScalarTestField,
    VectorTestField,
    annulus_rule,
    ball_rule,
    directional_derivative,
    integrate,
    sphere_rule,
)
from .diagnostics import (
    AngleReport,
    PhaseProfile,
    build_phase_profile,
    check_subsonic,
    compute_sector_angle,
    numerical_range_arg_extrema,
    pointwise_sector_check,
    select_rotation_angle,
)
from .forms import (
    FormContext,
    check_atmosphere_coercivity,
    check_flow_symmetry,
    check_imaginary_part_identity,
    check_reformulation_identity,
    eval_coupled_form,
    eval_cowling_form,
    eval_full_form,
    eval_reformulated_form,
)

__all__ = [
    "BackgroundModel",
    "CoefficientSample",
    "ValidationReport",
    "derived_coefficients",
    "load_model",
    "validate_assumptions",
    "QuadratureRule",
    "ScalarTestField",
    "VectorTestField",
    "annulus_rule",
    "ball_rule",
    "sphere_rule",
    "directional_derivative",
    "integrate",
    "AngleReport",
    "PhaseProfile",
    "build_phase_profile",
    "check_subsonic",
    "compute_sector_angle",
    "numerical_range_arg_extrema",
    "pointwise_sector_check",
    "select_rotation_angle",
    "FormContext",
    "check_atmosphere_coercivity",
    "check_flow_symmetry",
    "check_imaginary_part_identity",
    "check_reformulation_identity",
    "eval_coupled_form",
    "eval_cowling_form",
    "eval_full_form",
    "eval_reformulated_form",
]
