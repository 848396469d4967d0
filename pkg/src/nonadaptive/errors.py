"""Exception hierarchy shared by the library and CLI."""

from __future__ import annotations


class NonAdaptiveError(Exception):
    """Base class for domain failures (CLI exit code 1)."""


class BudgetExceededError(NonAdaptiveError):
    """Subset enumeration would exceed the configured budget."""

    def __init__(self, budget: int, what: str = "subsets"):
        super().__init__(f"budget exceeded: more than {budget} {what} to check")
        self.budget = budget


class SamplingError(NonAdaptiveError):
    """No sampled candidate passed verification within the attempt limit."""

    def __init__(self, message: str, attempts: int, check: str | None = None, witness=None):
        super().__init__(message)
        self.attempts = attempts
        self.check = check
        self.witness = witness


class BuildError(NonAdaptiveError):
    """Dictionary construction failed on every sampled expander."""

    def __init__(self, message: str, attempts: int, witness: frozenset[int] | None):
        super().__init__(message)
        self.attempts = attempts
        self.witness = witness


class ConfigurationError(NonAdaptiveError, ValueError):
    """Parameters that cannot produce a meaningful run."""


class ParseError(NonAdaptiveError, ValueError):
    """Malformed serialized record."""


class BadMagicError(ParseError):
    pass


class TruncatedError(ParseError):
    pass


class CorruptRecordError(ParseError):
    """Structurally complete record whose contents violate an invariant."""
