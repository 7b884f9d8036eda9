"""Scaled-certificate safe control for second-order systems.

Builds weak control Lyapunov-barrier functions by sigmoid-scaling a quadratic
Lyapunov function near a half-plane unsafe set, verifies them on a grid, and
composes them with feedback linearization into a safe task-space controller
for a planar two-link manipulator.
"""

from . import clbf, manipulator, numerics, scenario, sim, sontag, transform
from .clbf import (
    HalfPlaneUnsafe,
    MarginPolicy,
    QuadraticCLF,
    RegionBox,
    SigmoidShape,
    WeakCLBF,
    check_c_omega_subset,
    clbf_eval,
    clbf_grad,
    select_parameters,
    verify_weak_clbf,
)
from .errors import SafeFlError
from .numerics import finite_diff_grad, is_spd, solve_lyapunov_2x2
from .sim import SimConfig, Trajectory, rk4_step, safety_monitor, simulate_closed_loop
from .sontag import safe_aux_input, sontag_universal
from .transform import (
    ConstraintSet,
    DecouplingTransform,
    GainSchedule,
    assemble_u_safe,
    build_gain_matrix,
    build_transform,
    initial_set_membership,
)

__version__ = "0.1.0"

__all__ = [
    "HalfPlaneUnsafe",
    "MarginPolicy",
    "QuadraticCLF",
    "RegionBox",
    "SafeFlError",
    "SigmoidShape",
    "SimConfig",
    "Trajectory",
    "WeakCLBF",
    "ConstraintSet",
    "DecouplingTransform",
    "GainSchedule",
    "assemble_u_safe",
    "build_gain_matrix",
    "build_transform",
    "check_c_omega_subset",
    "clbf_eval",
    "clbf_grad",
    "finite_diff_grad",
    "initial_set_membership",
    "is_spd",
    "rk4_step",
    "safe_aux_input",
    "safety_monitor",
    "select_parameters",
    "simulate_closed_loop",
    "solve_lyapunov_2x2",
    "sontag_universal",
    "verify_weak_clbf",
    "__version__",
]
