"""Exception types shared across the pipeline."""

from __future__ import annotations


class BiblioRankError(Exception):
    """Base class for all errors raised by this package."""


class IngestError(BiblioRankError):
    """The publication stream itself is unreadable (not a per-record problem)."""


class GraphLoadError(BiblioRankError):
    """A citation edge references a publication id missing from the corpus."""


class ThesaurusError(BiblioRankError):
    """The thesaurus or institutions file violates its format contract."""


class AmbiguousMatchError(BiblioRankError):
    """Two distinct institutions matched one address with equal-length variants."""

    def __init__(self, address_raw: str, candidates: tuple[str, ...]):
        self.address_raw = address_raw
        self.candidates = candidates
        super().__init__(
            f"address {address_raw!r} matches {len(candidates)} institutions "
            f"with equal-length variants: {', '.join(candidates)}"
        )


class UnknownInstitutionError(BiblioRankError):
    """An indicator was requested for an institution absent from the assignment table."""


class ConsistencyError(BiblioRankError):
    """A publication was scored against a cell table that does not contain it."""


class GenerationError(BiblioRankError):
    """Synthetic corpus parameters are inconsistent."""


class PipelineError(BiblioRankError):
    """A pipeline stage failed; carries the stage name for CLI diagnostics."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[stage:{stage}] {message}")
