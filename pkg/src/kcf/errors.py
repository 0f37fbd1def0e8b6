"""Exception hierarchy shared across the package."""

from __future__ import annotations


class KcfError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(KcfError):
    """An input file is malformed (bad JSON, wrong types, unknown keys)."""


class ValidationError(KcfError):
    """An input parsed but violated an invariant.

    The message names the violated invariant and the offending id.
    """


class UnknownId(KcfError):
    """A tactic or technique id is not present in the loaded taxonomy."""


class NoObjectiveResolvable(KcfError):
    """No objective tactic could be inferred for an incident."""


class UnsatisfiablePrerequisites(KcfError):
    """Observed event order contradicts the prerequisite constraints."""


class MissingCandidates(KcfError):
    """An extrapolated tactic has no candidate technique set."""


class ChainCapExceeded(KcfError):
    """Enumerating an incident would exceed the configured chain cap."""

    def __init__(self, incident_id: str, count: int, cap: int):
        super().__init__(
            f"incident {incident_id}: {count} chains would exceed cap {cap}"
        )
        self.incident_id = incident_id
        self.count = count
        self.cap = cap


class MissingAnnotation(KcfError):
    """A consequence score was requested for an unannotated incident."""


class LengthMismatch(KcfError):
    """Value and weight vectors have different lengths."""


class InvalidWeights(KcfError):
    """A weight vector is empty, out of bounds, or does not sum to 1."""


class EmptyChain(KcfError):
    """A per-chain statistic was requested for a chain with no steps."""


class EmptySet(KcfError):
    """An attack-level statistic was requested over zero kill chains."""
