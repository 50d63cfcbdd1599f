#!/usr/bin/env python3
"""Regenerate the golden canonical-JSON fixtures under tests/golden/.

Run from the repository root after an intentional schema or fixture
change; the acceptance suite separately verifies every value in these
files against brute-force oracles before trusting byte equality.
"""

from pathlib import Path

from ragx import (
    Corpus,
    Document,
    Question,
    RagPipeline,
    explain_generation,
    explain_retrieval,
    to_canonical_json,
)
from ragx.backends import ExtractiveMockGenerator, LocalLexicalEmbedder

GOLDEN_DIR = Path(__file__).resolve().parent.parent / "tests" / "golden"


def sky_retrieval_json() -> str:
    question = Question(id="q-sky", text="what color is the sky")
    document = Document(id="d-sky", text="the sky is blue")
    embedder = LocalLexicalEmbedder.from_texts([question.text, document.text])
    return to_canonical_json(explain_retrieval(question, document, embedder))


def capital_generation_json() -> str:
    corpus = Corpus(
        documents=(
            Document(
                id="france",
                text="Paris is the capital of France. Berlin is the capital of Germany.",
            ),
        )
    )
    pipeline = RagPipeline(
        corpus=corpus,
        embedder=LocalLexicalEmbedder.from_corpus(corpus),
        generator=ExtractiveMockGenerator(),
    )
    result = pipeline.answer(Question(id="q", text="What is the capital of France?"), k=1)
    explanation = explain_generation(
        result.prompt, pipeline.generator, reference_response=result.response
    )
    return to_canonical_json(explanation)


def main():
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    targets = {
        "sky_retrieval.json": sky_retrieval_json(),
        "capital_generation.json": capital_generation_json(),
    }
    for name, content in targets.items():
        path = GOLDEN_DIR / name
        path.write_text(content, encoding="utf-8")
        print(f"wrote {path} ({len(content)} bytes)")


if __name__ == "__main__":
    main()
