"""Exception taxonomy shared by every module.

Each error carries a stable machine-readable ``code`` (used verbatim in CLI
and HTTP error bodies) and an ``exit_code`` grouping it into the CLI's
usage (1) / backend (2) / data (3) classes.
"""

from __future__ import annotations

EXIT_USAGE = 1
EXIT_BACKEND = 2
EXIT_DATA = 3


class RagxError(Exception):
    """Base class for all domain errors."""

    code = "error"
    exit_code = EXIT_DATA

    def to_json_dict(self) -> dict:
        return {"code": self.code, "message": str(self)}


# -- usage / precondition ---------------------------------------------------

class PreconditionError(RagxError):
    """A caller violated a documented precondition (e.g. k < 1)."""

    code = "precondition"
    exit_code = EXIT_USAGE


# -- data errors ------------------------------------------------------------

class EmptyInput(RagxError):
    code = "empty_input"


class NoFeatures(RagxError):
    code = "no_features"


class UnknownStrategy(RagxError):
    code = "unknown_strategy"


class UnknownComparator(RagxError):
    code = "unknown_comparator"


class NumericError(RagxError):
    code = "numeric_error"


class EmptyCorpus(RagxError):
    code = "empty_corpus"


class IngestError(RagxError):
    code = "ingest_error"


class DuplicateId(RagxError):
    code = "duplicate_id"


class TemplateError(RagxError):
    code = "template_error"


class StaleResult(RagxError):
    code = "stale_result"


class UndefinedMetric(RagxError):
    code = "undefined_metric"


class AnnotationMismatch(RagxError):
    code = "annotation_mismatch"


class DimensionError(RagxError):
    code = "dimension_error"


# -- backend errors ---------------------------------------------------------

class BackendError(RagxError):
    exit_code = EXIT_BACKEND


class BackendUnavailable(BackendError):
    """Transport failure or retryable status that survived the retry policy."""

    code = "backend_unavailable"


class BackendProtocolError(BackendError):
    """The remote endpoint answered but violated the wire contract."""

    code = "backend_protocol"
