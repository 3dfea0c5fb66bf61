"""Exception types shared across the package."""

from __future__ import annotations


class LlmnasError(Exception):
    """Base class for all package-specific errors."""


class InvalidArchitecture(LlmnasError):
    """An architecture failed validation against its search space.

    Carries the list of human-readable violation messages and, when the
    architecture came from an advisor reply, the raw reply text.
    """

    def __init__(self, violations: list[str], raw: str | None = None):
        super().__init__("; ".join(violations))
        self.violations = list(violations)
        self.raw = raw


class KeyParseError(LlmnasError):
    """A canonical key string could not be parsed.

    ``position`` is the index of the first offending token (character
    index for digit grammars, slot index for delimited grammars).
    """

    def __init__(self, message: str, position: int = 0):
        super().__init__(f"{message} (at token {position})")
        self.position = position


class SpaceTooLarge(LlmnasError):
    """Refusing to enumerate a search space above the safety guard."""


class DimensionError(LlmnasError):
    """A shape or stride argument was non-positive or inconsistent."""


class FormatError(LlmnasError):
    """A benchmark file violated the expected line format.

    ``line`` is the 1-based line number of the first offending line.
    """

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class DuplicateKey(FormatError):
    """The same canonical key appeared twice in a benchmark file."""


class UnknownArchitecture(LlmnasError):
    """Lookup of a key that is not present in the benchmark table."""

    def __init__(self, key: str):
        super().__init__(f"architecture not in table: {key}")
        self.key = key


class ParseError(LlmnasError):
    """An advisor reply could not be interpreted as a proposal.

    The raw reply text is kept for transcripts and diagnostics.
    """

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class TransportError(LlmnasError):
    """A chat-completions request failed at the transport level."""


class ConstraintUnsatisfied(LlmnasError):
    """The advisor kept proposing over-budget models until the retry
    budget ran out."""

    def __init__(self, flops_m: float, limit_m: float, attempts: int):
        super().__init__(
            f"no proposal within {limit_m:g}M FLOPs after {attempts} attempts "
            f"(last: {flops_m:.1f}M)"
        )
        self.flops_m = flops_m
        self.limit_m = limit_m
        self.attempts = attempts


class AdvisorFailed(LlmnasError):
    """The advisor exhausted its parse-retry budget or stopped replying."""


class EmptyTrace(LlmnasError):
    """A trace contains no successfully evaluated iteration."""


class MixedRuns(LlmnasError):
    """Records from incompatible runs were combined in one report."""
