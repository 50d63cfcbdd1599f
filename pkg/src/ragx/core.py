"""Domain types shared by the pipeline, the explainers and the interfaces.

All types are immutable values after construction and therefore safe to
share across threads. Character spans are half-open ``[start, end)`` pairs
of Unicode code-point offsets into the text they annotate.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple

from .errors import PreconditionError

Span = Tuple[int, int]


class Granularity(enum.Enum):
    WORD = "word"
    SENTENCE = "sentence"


class Target(enum.Enum):
    RETRIEVAL = "retrieval"
    GENERATION = "generation"


class OutcomeKind(enum.Enum):
    RETRIEVAL_SCORE = "retrieval_score"
    GENERATED_TEXT = "generated_text"


def spans_overlap(a: Span, b: Span) -> bool:
    """True when two half-open spans share at least one position."""
    return a[0] < b[1] and b[0] < a[1]


def validate_spans(spans: Sequence[Span], bound: int) -> None:
    """Require spans to be in-bounds, non-empty, sorted and disjoint."""
    prev_end = -1
    for start, end in spans:
        if not (0 <= start < end <= bound):
            raise PreconditionError(f"span [{start},{end}) out of bounds for length {bound}")
        if start < prev_end:
            raise PreconditionError(f"span [{start},{end}) overlaps or is out of order")
        prev_end = end


def stable_digest(payload: object) -> str:
    """SHA-256 hex digest of a JSON-serializable value, key-order independent."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Question:
    id: str
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise PreconditionError("question text must be non-empty")


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.text:
            raise PreconditionError(f"document {self.id!r} has empty text")


@dataclass(frozen=True)
class Prompt:
    """A rendered prompt plus the provenance needed to explain it.

    ``protected_spans`` mark regions of ``rendered`` (template boilerplate)
    that perturbation must not touch.
    """

    instruction: str
    context_blocks: Tuple[Tuple[str, str], ...]
    question_text: str
    rendered: str
    protected_spans: Tuple[Span, ...] = ()
    warnings: Tuple[str, ...] = ()

    def __post_init__(self):
        validate_spans(self.protected_spans, len(self.rendered))


@dataclass(frozen=True)
class GeneratedResponse:
    text: str
    backend_id: str
    settings_fingerprint: str


@dataclass(frozen=True)
class Feature:
    """One decomposed unit of a source text (a word or a sentence)."""

    index: int
    text: str
    span: Span
    granularity: Granularity

    def __post_init__(self):
        start, end = self.span
        if start < 0 or end < start:
            raise PreconditionError(f"invalid feature span [{start},{end})")


@dataclass(frozen=True)
class PerturbedInput:
    feature_index: int
    text: str
    strategy_id: str


@dataclass(frozen=True)
class PerturbationOutcome:
    """Measured effect of one perturbation.

    Exactly one of ``score`` (retrieval) and ``response_text`` (generation)
    is present, matching ``kind``. ``perturbed_text`` is retained so UIs can
    show the what-if input without recomputation.
    """

    feature_index: int
    kind: OutcomeKind
    perturbed_text: str
    similarity_to_reference: float
    raw_delta: float
    score: Optional[float] = None
    response_text: Optional[str] = None

    def __post_init__(self):
        if self.kind is OutcomeKind.RETRIEVAL_SCORE:
            if self.score is None or self.response_text is not None:
                raise PreconditionError("retrieval outcome must carry score only")
        else:
            if self.response_text is None or self.score is not None:
                raise PreconditionError("generation outcome must carry response_text only")
        if not 0.0 <= self.similarity_to_reference <= 1.0:
            raise PreconditionError(
                f"similarity_to_reference {self.similarity_to_reference} outside [0,1]"
            )


@dataclass(frozen=True)
class BackendDescriptor:
    """Provenance record for an embedder or generator backend."""

    backend_id: str
    kind: str  # "embedder" | "generator"
    endpoint: Optional[str] = None
    model_name: Optional[str] = None
    deterministic: bool = True

    def to_json_dict(self) -> dict:
        return {
            "backend_id": self.backend_id,
            "kind": self.kind,
            "endpoint": self.endpoint,
            "model_name": self.model_name,
            "deterministic": self.deterministic,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "BackendDescriptor":
        return cls(
            backend_id=data["backend_id"],
            kind=data["kind"],
            endpoint=data.get("endpoint"),
            model_name=data.get("model_name"),
            deterministic=bool(data.get("deterministic", True)),
        )


@dataclass(frozen=True)
class FeatureAttribution:
    """A feature together with its importance weight and measured outcome."""

    feature: Feature
    weight: float
    raw_delta: float
    outcome: PerturbationOutcome

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise PreconditionError(f"weight {self.weight} outside [0,1]")


@dataclass(frozen=True)
class Explanation:
    """Per-feature importance weights for one retrieval or generation event."""

    target: Target
    source_text: str
    granularity: Granularity
    features: Tuple[FeatureAttribution, ...]
    config_fingerprint: str
    backend: BackendDescriptor
    reference_score: Optional[float] = None
    reference_response: Optional[str] = None
    warnings: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.target is Target.RETRIEVAL and self.reference_score is None:
            raise PreconditionError("retrieval explanation needs reference_score")
        if self.target is Target.GENERATION and self.reference_response is None:
            raise PreconditionError("generation explanation needs reference_response")
        indices = [fa.feature.index for fa in self.features]
        if indices != sorted(indices):
            raise PreconditionError("features must be ordered by feature index")

    @property
    def backend_id(self) -> str:
        return self.backend.backend_id

    def weight_ranking(self) -> Tuple[int, ...]:
        """Feature indices from most to least important, ties by lower index."""
        return tuple(
            fa.feature.index
            for fa in sorted(self.features, key=lambda fa: (-fa.weight, fa.feature.index))
        )

    def top_k(self, k: int) -> Tuple[FeatureAttribution, ...]:
        order = sorted(self.features, key=lambda fa: (-fa.weight, fa.feature.index))
        return tuple(order[:k])


@dataclass(frozen=True)
class ExplainerConfig:
    """Knobs for one explanation run.

    ``granularity=None`` means the per-target default: word features for
    retrieval, sentence features for generation.
    """

    granularity: Optional[Granularity] = None
    strategy_id: str = "leave_one_out"
    comparator_id: str = "token_f1"
    parallelism: int = 8
    top_k_render: Optional[int] = None
    protect_instruction: bool = True

    def __post_init__(self):
        if self.parallelism < 1:
            raise PreconditionError("parallelism must be >= 1")


def fingerprint(config: ExplainerConfig) -> str:
    """Deterministic digest over every config field; equal configs hash equal."""
    return stable_digest(
        {
            "granularity": None if config.granularity is None else config.granularity.value,
            "strategy_id": config.strategy_id,
            "comparator_id": config.comparator_id,
            "parallelism": config.parallelism,
            "top_k_render": config.top_k_render,
            "protect_instruction": config.protect_instruction,
        }
    )


