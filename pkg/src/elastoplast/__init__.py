"""Vectorized finite element solver for small-strain elastoplasticity.

Provides Lagrange elements (P1, P2, Q1, Q2) in 2D and 3D, sparse assembly
of elastic and tangent stiffness matrices, return mappings for von Mises
(kinematic hardening) and Drucker-Prager plasticity, and a semismooth
Newton solver with benchmark drivers.
"""

from .exceptions import (
    ConfigurationError,
    DegenerateElementError,
    InvalidElementError,
    NewtonConvergenceError,
    SolverFailure,
)
from .reference_elements import ElementType, Family

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DegenerateElementError",
    "ElementType",
    "Family",
    "InvalidElementError",
    "NewtonConvergenceError",
    "SolverFailure",
]
