"""Bellman functions for sharp square-function inequalities.

Closed forms for the Davis and Bollobas problems, an obstacle-problem solver
that recovers them numerically, dyadic dynamic-programming bounds, and
Monte-Carlo checks of the underlying Brownian facts.
"""

from .bollobas import BollobasBellman, bollobas_B, sturm_root_count, weak_type_constant
from .davis import DavisBellman, davis_U
from .envelope import Grid2D, ObstacleSpec, solve_greatest_subsolution, solve_heat_envelope
from .lattice import Axis
from .reports import VerificationReport
from .specfn import davis_constant, phi, psi

__version__ = "0.1.0"

__all__ = [
    "Axis",
    "BollobasBellman",
    "DavisBellman",
    "Grid2D",
    "ObstacleSpec",
    "VerificationReport",
    "bollobas_B",
    "davis_U",
    "davis_constant",
    "phi",
    "psi",
    "solve_greatest_subsolution",
    "solve_heat_envelope",
    "sturm_root_count",
    "weak_type_constant",
]
