"""Exception hierarchy shared by every apmetric module."""

from __future__ import annotations


class ApmetricError(Exception):
    """Base class for all library errors."""


class DimensionError(ApmetricError, ValueError):
    pass


class NonFiniteError(ApmetricError, ArithmeticError):
    """A non-finite sample was met where a finite one is required."""

    def __init__(self, message: str, point=None):
        self.point = None if point is None else [float(v) for v in point]
        if self.point is not None:
            message = f"{message} at point {self.point}"
        super().__init__(message)


class DomainError(NonFiniteError):
    """Function argument outside the mathematical domain (e.g. arcsin(2))."""


class ExprSyntaxError(ApmetricError, ValueError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at offset {offset})")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ArityError(ExprSyntaxError):
    pass


class BracketError(ApmetricError, ArithmeticError):
    """Luxemburg bisection could not bracket the norm (modular infinite)."""


class RadiusError(ApmetricError, ValueError):
    """A tail-capture check on a truncated infinite integral failed."""


class ContractionError(ApmetricError, ValueError):
    pass


class MaxIterError(ApmetricError, RuntimeError):
    pass


class RangeError(ApmetricError, ValueError):
    """Special function requested outside its documented argument window."""


class SpecError(ApmetricError, ValueError):
    """Malformed metric / relation / family mini-syntax."""
