"""Deterministic in-process reference backends for tests and offline use."""

from __future__ import annotations

import re
from typing import Iterable, List, Sequence

from ..core import BackendDescriptor, GeneratedResponse, stable_digest
from ..decompose import decompose_sentences
from ..errors import EmptyCorpus, EmptyInput, PreconditionError
from ..textnorm import normalize_tokens, token_f1
from .vectors import EmbeddingVector, unit_normalize, zero_vector

# unicode letters and digits, underscore excluded
_LEXICAL_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def lexical_tokens(text: str) -> List[str]:
    return _LEXICAL_TOKEN_RE.findall(text.lower())


class LocalLexicalEmbedder:
    """Term-frequency embedder over a fixed vocabulary.

    Dimension equals the number of unique lowercased alphanumeric tokens in
    the vocabulary source; texts embed as L2-normalized term-frequency
    vectors with out-of-vocabulary tokens ignored.
    """

    def __init__(self, vocabulary: Sequence[str], backend_id: str = "lexical"):
        if not vocabulary:
            raise EmptyCorpus("lexical embedder needs a non-empty vocabulary")
        self.vocabulary = tuple(sorted(set(vocabulary)))
        self._coord = {token: i for i, token in enumerate(self.vocabulary)}
        self.descriptor = BackendDescriptor(
            backend_id=backend_id,
            kind="embedder",
            model_name=f"tf-{len(self.vocabulary)}d",
            deterministic=True,
        )

    @classmethod
    def from_texts(cls, texts: Iterable[str], backend_id: str = "lexical") -> "LocalLexicalEmbedder":
        vocab = sorted({t for text in texts for t in lexical_tokens(text)})
        if not vocab:
            raise EmptyCorpus("no alphanumeric tokens in vocabulary source")
        return cls(vocab, backend_id=backend_id)

    @classmethod
    def from_corpus(cls, corpus, backend_id: str = "lexical") -> "LocalLexicalEmbedder":
        docs = list(corpus.documents)
        if not docs:
            raise EmptyCorpus("cannot build vocabulary from an empty corpus")
        return cls.from_texts((d.text for d in docs), backend_id=backend_id)

    @property
    def dimension(self) -> int:
        return len(self.vocabulary)

    def embed(self, texts: Sequence[str]) -> List[EmbeddingVector]:
        if not texts:
            raise PreconditionError("embed requires at least one text")
        out = []
        for text in texts:
            counts = [0.0] * self.dimension
            hit = False
            for token in lexical_tokens(text):
                coord = self._coord.get(token)
                if coord is not None:
                    counts[coord] += 1.0
                    hit = True
            out.append(unit_normalize(counts) if hit else zero_vector(self.dimension))
        return out


_QUESTION_LABEL = "Question:"
_CONTEXT_LABEL = "Context:"


class ExtractiveMockGenerator:
    """Deterministic stand-in generator.

    Answers with the context sentence sharing the highest token-overlap F1
    with the question (lowercased, punctuation stripped); ties go to the
    earliest sentence. Parses the prompt by the default template's
    "Context:" / "Question:" labels, degrading gracefully when either label
    was perturbed away.
    """

    def __init__(self, backend_id: str = "extractive-mock"):
        self.descriptor = BackendDescriptor(
            backend_id=backend_id,
            kind="generator",
            model_name="extractive-overlap",
            deterministic=True,
        )
        self._settings_fingerprint = stable_digest(
            {"backend_id": backend_id, "rule": "max-token-overlap-f1"}
        )[:16]

    def generate(self, prompt_text: str) -> GeneratedResponse:
        question, context = self._parse(prompt_text)
        try:
            candidates = decompose_sentences(context)
        except EmptyInput:
            candidates = []
        text = ""
        if candidates:
            best = max(
                candidates,
                key=lambda f: (token_f1(question, f.text) if normalize_tokens(question) else 0.0, -f.index),
            )
            text = best.text
        return GeneratedResponse(
            text=text,
            backend_id=self.descriptor.backend_id,
            settings_fingerprint=self._settings_fingerprint,
        )

    @staticmethod
    def _parse(prompt_text: str) -> tuple:
        q_pos = prompt_text.rfind(_QUESTION_LABEL)
        if q_pos >= 0:
            question = prompt_text[q_pos + len(_QUESTION_LABEL):].strip()
            head = prompt_text[:q_pos]
        else:
            question = ""
            head = prompt_text
        c_pos = head.find(_CONTEXT_LABEL)
        context = head[c_pos + len(_CONTEXT_LABEL):] if c_pos >= 0 else head
        return question, context.strip()


class ConstantGenerator:
    """Returns a fixed text for any prompt; useful for degenerate-case tests."""

    def __init__(self, text: str = "ok", backend_id: str = "constant"):
        self.text = text
        self.descriptor = BackendDescriptor(
            backend_id=backend_id,
            kind="generator",
            model_name="constant",
            deterministic=True,
        )
        self._settings_fingerprint = stable_digest({"backend_id": backend_id, "text": text})[:16]

    def generate(self, prompt_text: str) -> GeneratedResponse:
        return GeneratedResponse(
            text=self.text,
            backend_id=self.descriptor.backend_id,
            settings_fingerprint=self._settings_fingerprint,
        )
