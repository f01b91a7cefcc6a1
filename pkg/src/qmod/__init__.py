"""Hyperbolic quotient spaces, curve-family moduli and distortion experiments."""

from .errors import ConvergenceError, DomainError, ValidationError

__all__ = ["ConvergenceError", "DomainError", "ValidationError"]
__version__ = "0.1.0"
