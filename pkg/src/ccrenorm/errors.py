"""Exception taxonomy shared by all modules.

Every failure mode raised by the library derives from CCRenormError, so
callers (and the CLI) can distinguish bad inputs (DomainError, RangeError,
ContractError) from honest computational limits (PrecisionError, BudgetError)
and from structural outcomes of the dynamics itself (CombinatoricsError,
NotRenormalizableError, DegenerateError).
"""

from __future__ import annotations


class CCRenormError(Exception):
    """Base class for all library errors."""


class DomainError(CCRenormError):
    """An argument lies outside the mathematical domain of the operation."""


class RangeError(CCRenormError):
    """An index or depth exceeds what the data structure holds."""


class SolverError(CCRenormError):
    """A root solve failed to bracket or converge."""


class CombinatoricsError(CCRenormError):
    """The continued fraction of the rotation number ran out of entries."""


class BudgetError(CCRenormError):
    """An iterate or evaluation budget was exhausted before completion."""


class NotRenormalizableError(CCRenormError):
    """The pair has infinite height; renormalization is undefined."""


class DegenerateError(CCRenormError):
    """An orbit landed exactly on the critical point (superstable collision)."""


class ContractError(CCRenormError):
    """An internal invariant of a value object was violated."""


class PrecisionError(CCRenormError):
    """Working precision exhausted before the requested depth.

    Carries how far the computation is certified and, when available, the
    partial result so callers can still use what was achieved.
    """

    def __init__(self, message: str, certified_depth: int = 0, partial=None):
        super().__init__(message)
        self.certified_depth = certified_depth
        self.partial = partial
