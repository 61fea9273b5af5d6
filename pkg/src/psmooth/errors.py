"""Exception hierarchy shared by every module."""

from __future__ import annotations


class PsmoothError(Exception):
    """Base class for all library errors."""


class DomainError(PsmoothError, ValueError):
    """Input outside the mathematical domain of an operation."""


class PreconditionError(DomainError):
    """A stated precondition (divisibility, coprimality, ...) does not hold."""


class NotAdmissibleError(DomainError):
    """sigma(f; p) = p for some prime p where admissibility is required."""

    def __init__(self, prime: int, message: str | None = None):
        self.prime = prime
        super().__init__(message or f"polynomial is not admissible: sigma(f; {prime}) = {prime}")


class RangeError(DomainError):
    """Argument outside a configured numeric range."""


class ResourceError(PsmoothError, RuntimeError):
    """A configured resource cap (table size, Hensel modulus, ...) would be exceeded."""


class ParseError(PsmoothError, ValueError):
    """Malformed polynomial or factored-polynomial text."""


class UnfactoredInputError(DomainError):
    """A polynomial given as one factor is visibly composite; supply it factored."""
