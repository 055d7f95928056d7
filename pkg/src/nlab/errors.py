"""Exception types shared across the package."""


class NlabError(Exception):
    """Base class for all package errors."""


class UsageError(NlabError, ValueError):
    """Bad arguments: base < 2, empty block, limit too small, ..."""


class OutOfRangeError(NlabError, IndexError):
    """A query needs primes or entries beyond the sieved range."""


class DomainError(NlabError, ValueError):
    """Evaluation point outside a function's domain."""


class ThresholdError(DomainError):
    """Sample point below the validity threshold of a bound."""


class ConsistencyError(NlabError, RuntimeError):
    """Two routes to the same exact quantity disagree (an arithmetic bug)."""


class InvariantViolation(NlabError, AssertionError):
    """A construction or sandwich check failed."""
