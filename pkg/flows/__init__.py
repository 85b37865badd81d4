"""Fully discrete schemes for surface diffusion, curvature flow and area-conserved curvature flow."""

from flows.assembly import (
    FlowSystem,
    assemble_jacobian,
    assemble_residual,
    compute_mu_diagnostic,
    g_matrix,
    g_split,
    g_times_tangent_identity_check,
)
from flows.stepper import StepResult, lambda_half_step, step

__all__ = [
    "FlowSystem",
    "StepResult",
    "assemble_jacobian",
    "assemble_residual",
    "compute_mu_diagnostic",
    "g_matrix",
    "g_split",
    "g_times_tangent_identity_check",
    "lambda_half_step",
    "step",
]
