"""Exception hierarchy shared by all eqpl modules."""

from __future__ import annotations


class EqplError(Exception):
    """Base class for all errors raised by this package."""


class EqplSyntaxError(EqplError):
    """Malformed concrete syntax.

    Carries 1-based line/column of the offending token.
    """

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{line}:{column}: {message}" if line else message)
        self.line = line
        self.column = column


class CategoryError(EqplError):
    """Text parses, but not in the requested syntactic category."""


class ProvisoViolation(EqplError):
    """A side condition of an abbreviation is violated (e.g. QB(a) not in F)."""


class OutOfFrame(EqplError):
    """A formula or term mentions qubits outside the structure's frame."""


class UnboundVariable(EqplError):
    """An assignment is missing a value for a variable being looked up."""


class NotUnitNorm(EqplError):
    """A state vector's squared amplitudes do not sum to 1 within tolerance."""

    def __init__(self, actual: float):
        super().__init__(f"state vector has norm {actual!r}, expected 1")
        self.actual = actual


class OverlappingCarriers(EqplError):
    """Tensor product of state vectors with intersecting qubit sets."""


class AtomBudgetExceeded(EqplError):
    """A formula has more quantum atoms than the DNF enumeration allows."""
