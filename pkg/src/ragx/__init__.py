"""ragx: perturbation-based explanations for retrieval-augmented generation.

Runs a minimal open-book QA pipeline and explains, model-agnostically and
post hoc, why the retriever scored a document the way it did and which
parts of the prompt drove the generator's response.
"""

from .core import (
    BackendDescriptor,
    Document,
    Explanation,
    ExplainerConfig,
    Feature,
    FeatureAttribution,
    GeneratedResponse,
    Granularity,
    OutcomeKind,
    PerturbationOutcome,
    PerturbedInput,
    Prompt,
    Question,
    Target,
    fingerprint,
)
from .decompose import decompose, decompose_sentences, decompose_words
from .explain import (
    compare_texts,
    comparator_registry,
    explain_generation,
    explain_rag,
    explain_retrieval,
    normalize_weights,
)
from .perturb import leave_one_out, list_strategies, mask_feature, register_strategy
from .rag import (
    Corpus,
    RagPipeline,
    RagResult,
    VectorIndex,
    build_index,
    compose_prompt,
    ingest,
    load_index,
    save_index,
    search,
)
from .render import from_canonical_json, render_ansi, render_html, to_canonical_json

__version__ = "0.1.0"

__all__ = [
    "BackendDescriptor",
    "Corpus",
    "Document",
    "Explanation",
    "ExplainerConfig",
    "Feature",
    "FeatureAttribution",
    "GeneratedResponse",
    "Granularity",
    "OutcomeKind",
    "PerturbationOutcome",
    "PerturbedInput",
    "Prompt",
    "Question",
    "RagPipeline",
    "RagResult",
    "Target",
    "VectorIndex",
    "build_index",
    "compare_texts",
    "comparator_registry",
    "compose_prompt",
    "decompose",
    "decompose_sentences",
    "decompose_words",
    "explain_generation",
    "explain_rag",
    "explain_retrieval",
    "fingerprint",
    "from_canonical_json",
    "ingest",
    "leave_one_out",
    "list_strategies",
    "load_index",
    "mask_feature",
    "normalize_weights",
    "register_strategy",
    "render_ansi",
    "render_html",
    "save_index",
    "search",
    "to_canonical_json",
]
