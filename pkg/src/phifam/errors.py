"""Exception hierarchy.

Domain errors carry the offending quantity and the tolerance in force so the
CLI can turn them into structured findings instead of tracebacks.
"""

from __future__ import annotations


class PhiFamError(Exception):
    """Base class for every error raised by the library."""

    def __init__(self, message: str, quantity: str | None = None, tolerance: float | None = None):
        super().__init__(message)
        self.quantity = quantity
        self.tolerance = tolerance

    def as_record(self) -> dict:
        return {
            "error": type(self).__name__,
            "message": str(self),
            "quantity": self.quantity,
            "tolerance": self.tolerance,
        }


class DomainError(PhiFamError):
    """A numerical finding about the inputs (exit code 2 in the CLI)."""


class NonPositiveInput(DomainError, ValueError):
    pass


class DivergentIntegral(DomainError):
    pass


class DivergentMoment(DivergentIntegral):
    """The integral of u/phi(u) over (0, 1) diverges, so chi and I_phi are undefined."""


class OutsideDomain(DomainError):
    """No normalizing G exists for the requested parameter."""


class SupportMismatch(DomainError):
    pass


class SpaceMismatch(DomainError):
    pass


class ZeroDenominator(DomainError):
    pass


class SingularMetric(DomainError):
    pass
