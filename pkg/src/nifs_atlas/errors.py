"""Exception hierarchy.

Everything raised on bad input, violated preconditions, or failed hypotheses
derives from AtlasError; the CLI maps AtlasError to exit code 2 and anything
else to exit code 1.
"""

from __future__ import annotations


class AtlasError(Exception):
    """Base class for expected failures: bad parameters, violated hypotheses."""


class ParameterError(AtlasError):
    """A parameter is outside its documented range."""


class DegenerateAnnulusError(AtlasError):
    """Annulus has inner radius 0 (infinite modulus) or inner >= outer."""


class ContainmentError(AtlasError):
    """A required set containment does not hold."""


class DomainError(AtlasError):
    """A point lies on or outside the boundary of the reference domain."""


class ModeError(AtlasError):
    """Operation not available for this enclosure or map kind."""


class BranchCutError(AtlasError):
    """Square-root argument touches the branch point or crosses the cut."""

    def __init__(self, message: str, factor_index: int | None = None):
        super().__init__(message)
        self.factor_index = factor_index


class HorizonError(AtlasError):
    """A stage beyond the materialized horizon was requested."""


class SizeCapError(AtlasError):
    """An enumeration would exceed the configured size cap."""


class HypothesisError(AtlasError):
    """A certification hypothesis fails on the given data."""


class NoValidCError(HypothesisError):
    """No comparison constant exists because some boundary gap is zero."""


class ParseError(AtlasError):
    """Sequence-rule expression is malformed.

    Carries the byte offset of the failure and the tokens that would have
    been accepted there.
    """

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        detail = f"{message} at offset {offset}"
        if expected:
            detail += " (expected " + ", ".join(expected) + ")"
        super().__init__(detail)
        self.offset = offset
        self.expected = expected


class EvalError(AtlasError):
    """Sequence-rule evaluation produced a non-finite value or divided by zero."""


class ConfigError(AtlasError):
    """Run configuration failed schema validation."""
