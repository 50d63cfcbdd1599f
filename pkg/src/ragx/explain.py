"""Explanation orchestration: decompose, perturb, re-score or re-generate,
compare against the reference, and normalize into feature weights.

Weights clamp negative deltas to zero: a feature whose removal *increases*
similarity is a detractor, not an explanation of the observed output. The
signed delta is kept alongside for anyone who wants it.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .backends.base import Embedder, Generator
from .backends.cache import CachedEmbedder, CachedGenerator
from .backends.vectors import cosine
from .core import (
    Document,
    Explanation,
    ExplainerConfig,
    Feature,
    FeatureAttribution,
    GeneratedResponse,
    Granularity,
    OutcomeKind,
    PerturbationOutcome,
    Prompt,
    Question,
    Span,
    Target,
    fingerprint,
)
from .decompose import decompose
from .errors import NoFeatures, NumericError, StaleResult, UnknownComparator
from .perturb import get_strategy
from .textnorm import token_f1

DEGENERATE_REFERENCE = "degenerate_reference"
SCORE_VERIFY_TOLERANCE = 1e-6

Comparator = Callable[[str, str], float]


def _exact(reference: str, candidate: str) -> float:
    return 1.0 if reference.strip().lower() == candidate.strip().lower() else 0.0


def _levenshtein(reference: str, candidate: str) -> float:
    a = reference.strip().lower()
    b = candidate.strip().lower()
    if not a and not b:
        return 1.0
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        row = [i]
        for j, cb in enumerate(b, start=1):
            row.append(min(prev[j] + 1, row[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = row
    return 1.0 - prev[len(b)] / max(len(a), len(b))


DEFAULT_COMPARATORS: Dict[str, Comparator] = {
    "exact": _exact,
    "token_f1": token_f1,
    "levenshtein": _levenshtein,
}


def make_embedding_comparator(embedder: Embedder) -> Comparator:
    """Semantic comparator: cosine of the two texts rescaled to [0,1]."""

    def compare(reference: str, candidate: str) -> float:
        va, vb = embedder.embed([reference, candidate])
        return (cosine(va, vb) + 1.0) / 2.0

    return compare


def comparator_registry(embedder: Optional[Embedder] = None) -> Dict[str, Comparator]:
    registry = dict(DEFAULT_COMPARATORS)
    if embedder is not None:
        registry["embedding"] = make_embedding_comparator(embedder)
    return registry


def compare_texts(
    reference: str,
    candidate: str,
    comparator_id: str = "token_f1",
    comparators: Optional[Dict[str, Comparator]] = None,
) -> float:
    registry = comparators if comparators is not None else DEFAULT_COMPARATORS
    try:
        fn = registry[comparator_id]
    except KeyError:
        raise UnknownComparator(f"unknown comparator: {comparator_id!r}") from None
    return fn(reference, candidate)


def normalize_weights(raw_deltas: Sequence[float]) -> List[float]:
    """Clamp negatives to zero and scale so the largest positive delta is 1."""
    if not raw_deltas:
        raise NumericError("normalize_weights requires a non-empty list")
    for d in raw_deltas:
        if not math.isfinite(d):
            raise NumericError(f"non-finite delta: {d!r}")
    top = max(max(d, 0.0) for d in raw_deltas)
    if top == 0.0:
        return [0.0 for _ in raw_deltas]
    return [max(d, 0.0) / top for d in raw_deltas]


def _features_without_protected(
    rendered: str, protected_spans: Sequence[Span], granularity: Granularity
) -> List[Feature]:
    """Decompose only the unprotected regions, spans kept relative to the
    full text, features re-indexed globally."""
    segments: List[Span] = []
    cursor = 0
    for start, end in protected_spans:
        if start > cursor:
            segments.append((cursor, start))
        cursor = max(cursor, end)
    if cursor < len(rendered):
        segments.append((cursor, len(rendered)))

    features: List[Feature] = []
    for seg_start, seg_end in segments:
        segment = rendered[seg_start:seg_end]
        if not segment.strip():
            continue
        for f in decompose(segment, granularity):
            features.append(
                Feature(
                    index=len(features),
                    text=f.text,
                    span=(f.span[0] + seg_start, f.span[1] + seg_start),
                    granularity=granularity,
                )
            )
    return features


def explain_retrieval(
    question: Question,
    document: Document,
    embedder: Embedder,
    config: Optional[ExplainerConfig] = None,
) -> Explanation:
    """Why did the retriever score this document the way it did?

    Removes one feature at a time, re-embeds, and measures how much the
    cosine against the question drops.
    """
    config = config or ExplainerConfig()
    granularity = config.granularity or Granularity.WORD
    features = decompose(document.text, granularity)
    strategy = get_strategy(config.strategy_id)
    perturbations = strategy.fn(document.text, features, ())
    by_index = {f.index: f for f in features}

    cached = CachedEmbedder(embedder)
    vectors = cached.embed([question.text, document.text] + [p.text for p in perturbations])
    q_vec, d_vec = vectors[0], vectors[1]
    reference_score = cosine(q_vec, d_vec)

    scores = [cosine(q_vec, v) for v in vectors[2:]]
    raw_deltas = [reference_score - s for s in scores]

    warnings: Tuple[str, ...] = ()
    if reference_score <= 0.0:
        weights = [0.0 for _ in raw_deltas]
        warnings = (DEGENERATE_REFERENCE,)
    else:
        weights = normalize_weights(raw_deltas)

    attributions = tuple(
        FeatureAttribution(
            feature=by_index[p.feature_index],
            weight=w,
            raw_delta=delta,
            outcome=PerturbationOutcome(
                feature_index=p.feature_index,
                kind=OutcomeKind.RETRIEVAL_SCORE,
                perturbed_text=p.text,
                similarity_to_reference=1.0 - abs(delta) / 2.0,
                raw_delta=delta,
                score=s,
            ),
        )
        for p, s, delta, w in zip(perturbations, scores, raw_deltas, weights)
    )
    return Explanation(
        target=Target.RETRIEVAL,
        source_text=document.text,
        granularity=granularity,
        features=attributions,
        config_fingerprint=fingerprint(config),
        backend=embedder.descriptor,
        reference_score=reference_score,
        warnings=warnings,
    )


def explain_generation(
    prompt: Prompt,
    generator: Generator,
    config: Optional[ExplainerConfig] = None,
    comparator_id: Optional[str] = None,
    comparators: Optional[Dict[str, Comparator]] = None,
    reference_response: Optional[GeneratedResponse] = None,
) -> Explanation:
    """Which parts of the prompt drove the generated response?

    Removes one unprotected sentence at a time, re-generates, and measures
    how far each response drifts from the reference. ``comparator_id``
    overrides the config's comparator when given.
    """
    config = config or ExplainerConfig()
    if comparator_id is not None and comparator_id != config.comparator_id:
        config = dataclasses.replace(config, comparator_id=comparator_id)
    granularity = config.granularity or Granularity.SENTENCE
    protected = prompt.protected_spans if config.protect_instruction else ()
    features = _features_without_protected(prompt.rendered, protected, granularity)
    if not features:
        raise NoFeatures("prompt has no unprotected features to perturb")
    strategy = get_strategy(config.strategy_id)
    perturbations = strategy.fn(prompt.rendered, features, protected)
    if not perturbations:
        raise NoFeatures("all features are protected from perturbation")
    by_index = {f.index: f for f in features}

    cached = CachedGenerator(generator)
    reference = reference_response or cached.generate(prompt.rendered)
    workers = min(config.parallelism, len(perturbations))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        responses = list(pool.map(lambda p: cached.generate(p.text), perturbations))

    registry = comparators if comparators is not None else DEFAULT_COMPARATORS
    if config.comparator_id not in registry:
        raise UnknownComparator(f"unknown comparator: {config.comparator_id!r}")
    comparator = registry[config.comparator_id]

    similarities = [
        min(1.0, max(0.0, comparator(reference.text, r.text))) for r in responses
    ]
    raw_deltas = [1.0 - sim for sim in similarities]
    weights = normalize_weights(raw_deltas)

    attributions = tuple(
        FeatureAttribution(
            feature=by_index[p.feature_index],
            weight=w,
            raw_delta=delta,
            outcome=PerturbationOutcome(
                feature_index=p.feature_index,
                kind=OutcomeKind.GENERATED_TEXT,
                perturbed_text=p.text,
                similarity_to_reference=sim,
                raw_delta=delta,
                response_text=r.text,
            ),
        )
        for p, r, sim, delta, w in zip(perturbations, responses, similarities, raw_deltas, weights)
    )
    return Explanation(
        target=Target.GENERATION,
        source_text=prompt.rendered,
        granularity=granularity,
        features=attributions,
        config_fingerprint=fingerprint(config),
        backend=generator.descriptor,
        reference_response=reference.text,
    )


def explain_rag(
    rag_result,
    embedder: Embedder,
    generator: Generator,
    config: Optional[ExplainerConfig] = None,
    comparators: Optional[Dict[str, Comparator]] = None,
) -> Tuple[List[Explanation], Explanation]:
    """Explain every retrieved document and the generation, reusing the
    pipeline's reference score and response after verifying them."""
    config = config or ExplainerConfig()
    cached = CachedEmbedder(embedder)

    retrieval_explanations = []
    for document, stored_score in rag_result.retrieved:
        q_vec, d_vec = cached.embed([rag_result.question.text, document.text])
        recomputed = cosine(q_vec, d_vec)
        if abs(recomputed - stored_score) > SCORE_VERIFY_TOLERANCE:
            raise StaleResult(
                f"stored score {stored_score} for {document.id!r} no longer matches "
                f"recomputed {recomputed}"
            )
        retrieval_explanations.append(
            explain_retrieval(rag_result.question, document, cached, config)
        )

    generation_explanation = explain_generation(
        rag_result.prompt,
        generator,
        config,
        comparators=comparators,
        reference_response=rag_result.response,
    )
    return retrieval_explanations, generation_explanation
