#!/usr/bin/env python3
"""End-to-end demo on a tiny inline corpus.

Answers a question through the pipeline, explains both stages, and prints
ANSI heatmaps plus the canonical JSON for the retrieval explanation.
"""

from ragx import (
    Corpus,
    Document,
    Question,
    RagPipeline,
    explain_rag,
    render_ansi,
    to_canonical_json,
)
from ragx.backends import ExtractiveMockGenerator, LocalLexicalEmbedder

CORPUS = Corpus(
    documents=(
        Document(id="sky", text="the sky is blue"),
        Document(id="grass", text="grass is green"),
        Document(
            id="capitals",
            text="Paris is the capital of France. Berlin is the capital of Germany.",
        ),
    )
)


def main():
    question = Question(id="demo", text="what color is the sky")
    embedder = LocalLexicalEmbedder.from_texts(
        [d.text for d in CORPUS.documents] + [question.text]
    )
    pipeline = RagPipeline(
        corpus=CORPUS, embedder=embedder, generator=ExtractiveMockGenerator()
    )

    result = pipeline.answer(question, k=2)
    print(f"question : {question.text}")
    for doc, score in result.retrieved:
        print(f"retrieved: {doc.id}  score={score:.5f}")
    print(f"response : {result.response.text}\n")

    retrievals, generation = explain_rag(result, embedder, pipeline.generator)
    for explanation in retrievals:
        print(f"--- why was this retrieved? (s_d={explanation.reference_score:.5f})")
        print(render_ansi(explanation), "\n")

    print("--- which prompt parts drove the response?")
    print(render_ansi(generation), "\n")

    print("--- canonical JSON of the top retrieval explanation")
    print(to_canonical_json(retrievals[0]), end="")


if __name__ == "__main__":
    main()
