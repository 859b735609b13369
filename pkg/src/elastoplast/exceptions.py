"""Exception types raised across the package."""

from __future__ import annotations


class InvalidElementError(ValueError):
    """Unsupported (family, dim) combination."""


class DegenerateElementError(ValueError):
    """An element has a non-positive Jacobian determinant."""

    def __init__(self, element: int, det: float):
        super().__init__(f"element {element} is degenerate (det J = {det:.3e})")
        self.element = element
        self.det = det


class ConfigurationError(ValueError):
    """Inconsistent problem or run configuration."""


class SolverFailure(RuntimeError):
    """The restricted linear system could not be solved.

    ``residual`` holds the relative residual that was achieved (``inf`` when
    the factorization itself broke down).
    """

    def __init__(self, message: str, residual: float = float("inf")):
        super().__init__(message)
        self.residual = residual


class NewtonConvergenceError(RuntimeError):
    """Newton iteration did not meet the stopping test within max_iters."""

    def __init__(self, message: str, iterations: int, last_ratio: float):
        super().__init__(message)
        self.iterations = iterations
        self.last_ratio = last_ratio
