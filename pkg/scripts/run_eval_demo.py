#!/usr/bin/env python3
"""Build a synthetic annotations file, run the evaluator, print the report.

Writes eval_demo.jsonl and eval_demo_report.json into the working
directory. The annotations mark the spans a careful reader would mark;
the report shows how well the explainer's top features recover them.
"""

import json

from ragx import Corpus, Document, Question, RagPipeline
from ragx.backends import ExtractiveMockGenerator, LocalLexicalEmbedder
from ragx.evaluate import run_eval

FRANCE = "Paris is the capital of France. Berlin is the capital of Germany."


def _span(haystack, needle):
    start = haystack.index(needle)
    return [start, start + len(needle)]


def build_annotations(path):
    corpus = Corpus(documents=(Document(id="france", text=FRANCE),))
    pipeline = RagPipeline(
        corpus=corpus,
        embedder=LocalLexicalEmbedder.from_corpus(corpus),
        generator=ExtractiveMockGenerator(),
    )
    prompt = pipeline.answer(
        Question(id="q", text="What is the capital of France?"), k=1
    ).prompt.rendered

    rows = [
        {
            "case_id": "retrieval-sky",
            "target": "retrieval",
            "source_text": "the sky is blue",
            "annotated_spans": [_span("the sky is blue", "sky")],
            "question": "what color is the sky",
        },
        {
            "case_id": "generation-paris",
            "target": "generation",
            "source_text": prompt,
            "annotated_spans": [_span(prompt, "Context: Paris is the capital of France.")],
            "gold_answer": "Paris is the capital of France.",
        },
        {
            "case_id": "generation-berlin-miss",
            "target": "generation",
            "source_text": prompt,
            "annotated_spans": [_span(prompt, "Berlin is the capital of Germany.")],
            "gold_answer": "Berlin is the capital of Germany.",
        },
    ]
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return rows


def main():
    annotations = "eval_demo.jsonl"
    rows = build_annotations(annotations)
    vocabulary = [r["source_text"] for r in rows]
    vocabulary.extend(r["question"] for r in rows if "question" in r)
    embedder = LocalLexicalEmbedder.from_texts(vocabulary)
    report = run_eval(annotations, embedder, ExtractiveMockGenerator())
    print(report.to_text())
    with open("eval_demo_report.json", "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    print("report written to eval_demo_report.json")


if __name__ == "__main__":
    main()
