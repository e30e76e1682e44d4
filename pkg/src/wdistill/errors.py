"""Exception hierarchy shared across the package.

The split matters for the CLI, which maps invalid input specifications
(SpecError) to exit code 2 and internal numerical failures (ToleranceError)
to exit code 3.
"""
from __future__ import annotations


class ShapeError(ValueError):
    """Array/matrix dimensions are inconsistent with the operation."""


class ValidationError(ValueError):
    """An input violates a documented precondition or invariant."""


class SpecError(ValidationError):
    """The W' coefficient specification is invalid (normalization, arity)."""


class DegenerateCoefficientError(SpecError):
    """A coefficient is exactly zero; the distillation plan is undefined."""


class TruncationError(ValidationError):
    """The Fock cutoff is too small to hold a populated photon level."""


class UnsupportedModeError(ValidationError):
    """Closed-form cavity evolution requested outside resonance."""


class ToleranceError(ArithmeticError):
    """An internal numerical cross-check exceeded its tolerance."""
