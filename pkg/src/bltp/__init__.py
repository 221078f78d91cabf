"""Retarded fields, self-force and dynamics of point charges with a Bessel memory kernel."""

from ._backend import BACKEND
from .dynamics import ExternalForce, SolverConfig, TrajectoryResult, picard_window, solve_multi, solve_single
from .errors import BLTPError
from .fields import Particle, field_tensor, field_tensor_gradient, gauge_residual, vector_potential
from .selfforce import self_eb, self_force_four
from .worldline import Worldline, momentum_to_velocity, retarded_time, smooth_kick

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BLTPError", "ExternalForce", "Particle", "SolverConfig", "TrajectoryResult",
    "Worldline", "field_tensor", "field_tensor_gradient", "gauge_residual", "momentum_to_velocity",
    "picard_window", "retarded_time", "self_eb", "self_force_four", "smooth_kick", "solve_multi",
    "solve_single", "vector_potential",
]
