"""Command-line interface tying ingestion, QA, explanation, evaluation and
rendering together.

Exit codes: 0 success, 1 usage error, 2 backend error, 3 data error.
Errors go to stderr as single-line JSON {code, message}.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import re
import sys
from typing import Optional, Tuple

from .config import (
    AppConfig,
    LEXICAL,
    apply_cli_overrides,
    load_config,
    make_embedder,
    make_generator,
    question_scoped_embedder,
)
from .core import Document, Question
from .errors import EXIT_USAGE, IngestError, PreconditionError, RagxError
from .evaluate import load_annotations, run_eval
from .explain import comparator_registry, explain_generation, explain_retrieval
from .rag import Corpus, RagPipeline, build_index, ingest, load_index, save_index
from .render import canonical_json, render_ansi, render_html, to_canonical_json

_ANSI_CODE_RE = re.compile(r"\x1b\[[0-9;]*m")


class _Parser(argparse.ArgumentParser):
    """argparse with the error contract: JSON on stderr, exit code 1."""

    def error(self, message):
        print(json.dumps({"code": "usage", "message": message}), file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--embedder", metavar="ID", help="embedder backend id (lexical|http)")
    common.add_argument(
        "--generator", metavar="ID", help="generator backend id (extractive|constant|http)"
    )
    common.add_argument("--parallelism", type=int, metavar="N", help="concurrent backend calls")
    common.add_argument(
        "--color",
        choices=("auto", "always", "never"),
        default="auto",
        help="ANSI color policy for terminal output",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _Parser(prog="ragx", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p_index = sub.add_parser("index", parents=[common], help="build and persist a vector index")
    p_index.add_argument("path", help="corpus file or directory (.txt / .jsonl)")
    p_index.add_argument("--out", default="index.ragx", help="output index file")
    p_index.set_defaults(func=cmd_index)

    p_query = sub.add_parser("query", parents=[common], help="answer a question over the corpus")
    p_query.add_argument("question")
    p_query.add_argument("--k", type=int, default=None, help="documents to retrieve")
    p_query.add_argument("--index", metavar="PATH", help="load a persisted index")
    p_query.add_argument("--corpus", metavar="PATH", help="ingest a corpus directly")
    p_query.set_defaults(func=cmd_query)

    p_explain = sub.add_parser("explain", help="explain retrieval or generation")
    esub = p_explain.add_subparsers(dest="target")

    p_ret = esub.add_parser("retrieval", parents=[common], help="why was this document retrieved?")
    p_ret.add_argument("question")
    p_ret.add_argument("--doc-id", help="explain a document from the corpus/index")
    p_ret.add_argument("--text", help="explain an ad-hoc document text")
    p_ret.add_argument("--strategy", default=None, help="perturbation strategy id")
    p_ret.add_argument("--format", choices=("ansi", "html", "json"), default="ansi")
    p_ret.add_argument("--top-k", type=int, default=None, help="style only the k hottest features")
    p_ret.add_argument("--index", metavar="PATH")
    p_ret.add_argument("--corpus", metavar="PATH")
    p_ret.set_defaults(func=cmd_explain_retrieval)

    p_gen = esub.add_parser("generation", parents=[common], help="which prompt parts drove the answer?")
    p_gen.add_argument("question")
    p_gen.add_argument("--k", type=int, default=None, help="documents to retrieve")
    p_gen.add_argument("--comparator", default=None, help="response comparator id")
    p_gen.add_argument(
        "--include-instruction",
        action="store_true",
        help="also perturb the instruction template",
    )
    p_gen.add_argument("--strategy", default=None, help="perturbation strategy id")
    p_gen.add_argument("--format", choices=("ansi", "html", "json"), default="ansi")
    p_gen.add_argument("--top-k", type=int, default=None)
    p_gen.add_argument("--index", metavar="PATH")
    p_gen.add_argument("--corpus", metavar="PATH")
    p_gen.set_defaults(func=cmd_explain_generation)

    p_eval = sub.add_parser("eval", parents=[common], help="score explanations against annotations")
    p_eval.add_argument("annotations", help="annotations JSONL file")
    p_eval.add_argument("--report", metavar="PATH", help="write the JSON report here")
    p_eval.set_defaults(func=cmd_eval)

    p_serve = sub.add_parser("serve", parents=[common], help="run the HTTP service")
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def _app_config(args) -> AppConfig:
    config = load_config(getattr(args, "config", None))
    return apply_cli_overrides(
        config,
        embedder_id=getattr(args, "embedder", None),
        generator_id=getattr(args, "generator", None),
        parallelism=getattr(args, "parallelism", None),
    )


def _load_corpus_and_index(args, config: AppConfig):
    """Resolve (corpus, base_index, base_embedder) from flags or the config."""
    index_path = getattr(args, "index", None) or config.rag.index
    corpus_path = getattr(args, "corpus", None) or config.rag.corpus
    if index_path:
        index = load_index(index_path)
        corpus = Corpus(documents=index.documents)
        embedder = make_embedder(config.embedder, [d.text for d in corpus.documents])
        return corpus, index, embedder
    if corpus_path:
        corpus = ingest(corpus_path)
        embedder = make_embedder(config.embedder, [d.text for d in corpus.documents])
        return corpus, build_index(corpus, embedder), embedder
    raise IngestError("no index or corpus configured; pass --index/--corpus or set [rag] in the config")


def _emit_output(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_explanation(args, explanation) -> None:
    fmt = args.format
    if fmt == "json":
        _emit_output(to_canonical_json(explanation))
        return
    if fmt == "html":
        _emit_output(render_html(explanation, top_k=args.top_k))
        return
    rendered = render_ansi(explanation, top_k=args.top_k)
    color_on = args.color == "always" or (args.color == "auto" and sys.stdout.isatty())
    if not color_on:
        rendered = _ANSI_CODE_RE.sub("", rendered)
    _emit_output(rendered)


def cmd_index(args) -> int:
    config = _app_config(args)
    corpus = ingest(args.path)
    embedder = make_embedder(config.embedder, [d.text for d in corpus.documents])
    index = build_index(corpus, embedder)
    save_index(index, args.out)
    dim = index.entries[0][1].dimension if index.entries else 0
    _emit_output(canonical_json({"documents": len(corpus), "dimension": dim, "out": args.out}))
    return 0


def _rag_result_dict(result) -> dict:
    return {
        "question": {"id": result.question.id, "text": result.question.text},
        "retrieved": [
            {"id": doc.id, "text": doc.text, "metadata": dict(doc.metadata), "score": score}
            for doc, score in result.retrieved
        ],
        "prompt": {
            "rendered": result.prompt.rendered,
            "protected_spans": [[s, e] for s, e in result.prompt.protected_spans],
            "warnings": list(result.prompt.warnings),
        },
        "response": {
            "text": result.response.text,
            "backend_id": result.response.backend_id,
            "settings_fingerprint": result.response.settings_fingerprint,
        },
    }


def _pipeline(args, config: AppConfig, question_text: str) -> Tuple[RagPipeline, object, object]:
    corpus, index, base_embedder = _load_corpus_and_index(args, config)
    embedder, index_reusable = question_scoped_embedder(
        config.embedder, corpus, question_text, base=base_embedder
    )
    generator = make_generator(config.generator)
    pipeline = RagPipeline(
        corpus=corpus,
        embedder=embedder,
        generator=generator,
        template=config.rag.template,
        index=index if index_reusable else None,
    )
    return pipeline, embedder, generator


def cmd_query(args) -> int:
    config = _app_config(args)
    pipeline, _, _ = _pipeline(args, config, args.question)
    k = args.k if args.k is not None else config.rag.k
    result = pipeline.answer(Question(id="cli", text=args.question), k=k)
    _emit_output(canonical_json(_rag_result_dict(result)))
    return 0


def cmd_explain_retrieval(args) -> int:
    config = _app_config(args)
    explain_config = config.explain
    if args.strategy:
        explain_config = dataclasses.replace(explain_config, strategy_id=args.strategy)
    question = Question(id="cli", text=args.question)
    if args.text is not None and args.doc_id is not None:
        raise PreconditionError("--doc-id and --text are mutually exclusive")
    if args.text is not None:
        document = Document(id="adhoc", text=args.text)
        if config.embedder.id == LEXICAL:
            embedder = make_embedder(config.embedder, [question.text, document.text])
        else:
            embedder = make_embedder(config.embedder)
    elif args.doc_id is not None:
        corpus, _, base_embedder = _load_corpus_and_index(args, config)
        embedder, _ = question_scoped_embedder(
            config.embedder, corpus, question.text, base=base_embedder
        )
        document = corpus.get(args.doc_id)
        if document is None:
            raise IngestError(f"unknown document id: {args.doc_id!r}")
    else:
        raise PreconditionError("one of --doc-id or --text is required")
    explanation = explain_retrieval(question, document, embedder, explain_config)
    _emit_explanation(args, explanation)
    return 0


def cmd_explain_generation(args) -> int:
    config = _app_config(args)
    explain_config = config.explain
    overrides = {}
    if args.comparator:
        overrides["comparator_id"] = args.comparator
    if args.strategy:
        overrides["strategy_id"] = args.strategy
    if args.include_instruction:
        overrides["protect_instruction"] = False
    if overrides:
        explain_config = dataclasses.replace(explain_config, **overrides)
    pipeline, embedder, generator = _pipeline(args, config, args.question)
    k = args.k if args.k is not None else config.rag.k
    result = pipeline.answer(Question(id="cli", text=args.question), k=k)
    explanation = explain_generation(
        result.prompt,
        generator,
        explain_config,
        comparators=comparator_registry(embedder),
        reference_response=result.response,
    )
    _emit_explanation(args, explanation)
    return 0


def cmd_eval(args) -> int:
    config = _app_config(args)
    records = load_annotations(args.annotations)
    if config.embedder.id == LEXICAL:
        vocabulary = [r.source_text for r in records]
        vocabulary.extend(r.question for r in records if r.question)
        embedder = make_embedder(config.embedder, vocabulary or None)
    else:
        embedder = make_embedder(config.embedder)
    generator = make_generator(config.generator)
    report = run_eval(
        records,
        embedder,
        generator,
        config.explain,
        comparators=comparator_registry(embedder),
    )
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    _emit_output(report.to_text())
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_state, create_app

    config = _app_config(args)
    app = create_app(build_state(config))
    port = args.port if args.port is not None else config.service.port
    uvicorn.run(app, host=args.host, port=port)
    return 0


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else EXIT_USAGE
    func = getattr(args, "func", None)
    if func is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        return func(args)
    except RagxError as exc:
        print(json.dumps(exc.to_json_dict()), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
