"""Numerical study of the Hardy operator -Delta + mu/|x|^2 with the singular point on the boundary."""

from .errors import HardyLabError
from .geometry import TangentBall, build_graded_mesh, make_tangent_ball
from .halfspace import SpectralParams, alpha_exponents, c_mu, critical_mu

__version__ = "0.1.0"

__all__ = [
    "HardyLabError", "SpectralParams", "TangentBall", "alpha_exponents", "build_graded_mesh",
    "c_mu", "critical_mu", "make_tangent_ball",
]
