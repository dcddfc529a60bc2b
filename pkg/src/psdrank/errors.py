"""Exception hierarchy shared across the package."""


class PsdRankError(Exception):
    """Base class for all package errors."""


class InputError(PsdRankError):
    """Malformed or out-of-domain user input (bad shapes, NaN/Inf, negative data)."""


class DomainError(PsdRankError):
    """A mathematical precondition is violated (not psd, not symmetric, ...)."""


class ResourceError(PsdRankError):
    """A configured search budget would be exceeded."""


class NumericalFailure(PsdRankError):
    """A solver could not certify an answer within its iteration budget."""
