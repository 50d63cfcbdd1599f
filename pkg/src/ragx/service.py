"""HTTP API exposing the pipeline and the explainers.

Explanation responses are the canonical JSON bytes, identical to what the
CLI prints for the same inputs; the content digest doubles as the
explanation id (X-Explanation-Id header) for what-if lookups. Error
bodies are {code, message} with 400 malformed / 404 unknown / 422
degenerate / 502 backend failure.
"""

from __future__ import annotations

import dataclasses
import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeoutError
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import requests
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from .config import (
    AppConfig,
    LEXICAL,
    make_embedder,
    make_generator,
    question_scoped_embedder,
)
from .core import Document, Explanation, Granularity, Prompt, GeneratedResponse, Question
from .errors import (
    BackendError,
    BackendUnavailable,
    RagxError,
    UnknownComparator,
    UnknownStrategy,
)
from .explain import comparator_registry, explain_generation, explain_retrieval
from .rag import Corpus, RagPipeline, build_index, ingest, load_index
from .render import canonical_json, explanation_id, to_canonical_json


class HttpApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code


class _GatedBackend:
    """Caps total in-flight backend calls across all requests."""

    def __init__(self, inner, gate: threading.BoundedSemaphore):
        self.inner = inner
        self.gate = gate
        self.descriptor = inner.descriptor

    def embed(self, texts):
        with self.gate:
            return self.inner.embed(texts)

    def generate(self, prompt_text):
        with self.gate:
            return self.inner.generate(prompt_text)


class ExplanationStore:
    """Bounded LRU of explanations keyed by their content digest."""

    def __init__(self, capacity: int = 128):
        self.capacity = capacity
        self._lock = threading.RLock()
        self._items: "OrderedDict[str, Tuple[Explanation, str]]" = OrderedDict()

    def put(self, explanation: Explanation) -> str:
        canonical = to_canonical_json(explanation)
        key = explanation_id(explanation)
        with self._lock:
            self._items[key] = (explanation, canonical)
            self._items.move_to_end(key)
            while len(self._items) > self.capacity:
                self._items.popitem(last=False)
        return key

    def get(self, key: str) -> Optional[Tuple[Explanation, str]]:
        with self._lock:
            item = self._items.get(key)
            if item is not None:
                self._items.move_to_end(key)
            return item

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)


@dataclass
class ServiceState:
    config: AppConfig
    generator: object
    corpus: Optional[Corpus] = None
    index: Optional[object] = None
    corpus_embedder: Optional[object] = None
    store: ExplanationStore = None
    gate: threading.BoundedSemaphore = None
    executor: ThreadPoolExecutor = None

    def pipeline(self, question_text: str, generator=None, embedder_cfg=None) -> RagPipeline:
        if self.corpus is None:
            raise HttpApiError(404, "no_corpus", "no corpus or index is configured")
        cfg = embedder_cfg or self.config.embedder
        base = self.corpus_embedder if cfg == self.config.embedder else None
        embedder, index_reusable = question_scoped_embedder(
            cfg, self.corpus, question_text, base=base
        )
        return RagPipeline(
            corpus=self.corpus,
            embedder=_GatedBackend(embedder, self.gate),
            generator=_GatedBackend(generator or self.generator, self.gate),
            template=self.config.rag.template,
            index=self.index if (index_reusable and base is not None) else None,
        )


def build_state(config: AppConfig) -> ServiceState:
    corpus = index = corpus_embedder = None
    if config.rag.index:
        index = load_index(config.rag.index)
        corpus = Corpus(documents=index.documents)
    elif config.rag.corpus:
        corpus = ingest(config.rag.corpus)
    if corpus is not None:
        corpus_embedder = make_embedder(config.embedder, [d.text for d in corpus.documents])
        if index is None:
            index = build_index(corpus, corpus_embedder)
    return ServiceState(
        config=config,
        generator=make_generator(config.generator),
        corpus=corpus,
        index=index,
        corpus_embedder=corpus_embedder,
        store=ExplanationStore(capacity=config.service.lru_capacity),
        gate=threading.BoundedSemaphore(config.service.max_inflight),
        executor=ThreadPoolExecutor(max_workers=config.service.max_inflight),
    )


def _require_str(body: dict, key: str, required: bool = True) -> Optional[str]:
    value = body.get(key)
    if value is None:
        if required:
            raise HttpApiError(400, "malformed_body", f"missing required field {key!r}")
        return None
    if not isinstance(value, str):
        raise HttpApiError(400, "malformed_body", f"field {key!r} must be a string")
    return value


def _require_int(body: dict, key: str, default: int) -> int:
    value = body.get(key)
    if value is None:
        return default
    if isinstance(value, bool) or not isinstance(value, int):
        raise HttpApiError(400, "malformed_body", f"field {key!r} must be an integer")
    if value < 1:
        raise HttpApiError(422, "degenerate_input", f"field {key!r} must be >= 1")
    return value


def _nonempty(value: str, key: str) -> str:
    if not value.strip():
        raise HttpApiError(422, "degenerate_input", f"field {key!r} must be non-empty")
    return value


def _status_for(exc: RagxError) -> int:
    if isinstance(exc, BackendError):
        return 502
    if isinstance(exc, (UnknownStrategy, UnknownComparator)):
        return 400
    return 422


def _probe_reachable(endpoint: Optional[str]) -> bool:
    if not endpoint:
        return True  # in-process backend
    try:
        requests.get(endpoint.rstrip("/") + "/models", timeout=2.0)
        return True
    except requests.RequestException:
        return False


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="ragx", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(state.config.service.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(HttpApiError)
    async def _api_error(_request, exc: HttpApiError):
        return JSONResponse({"code": exc.code, "message": str(exc)}, status_code=exc.status)

    @app.exception_handler(RagxError)
    async def _domain_error(_request, exc: RagxError):
        return JSONResponse(exc.to_json_dict(), status_code=_status_for(exc))

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request, exc: RequestValidationError):
        return JSONResponse(
            {"code": "malformed_request", "message": str(exc.errors()[:1])}, status_code=400
        )

    async def _body(request: Request) -> dict:
        try:
            data = await request.json()
        except Exception:
            raise HttpApiError(400, "malformed_body", "request body must be a JSON object")
        if not isinstance(data, dict):
            raise HttpApiError(400, "malformed_body", "request body must be a JSON object")
        return data

    def _with_timeout(fn: Callable):
        future = state.executor.submit(fn)
        try:
            return future.result(timeout=state.config.service.timeout_seconds)
        except FutureTimeoutError:
            raise BackendUnavailable(
                f"explanation timed out after {state.config.service.timeout_seconds}s"
            ) from None

    def _embedder_for(question: str, text: Optional[str], embedder_id: Optional[str]):
        cfg = state.config.embedder
        if embedder_id:
            cfg = dataclasses.replace(cfg, id=embedder_id)
        if text is not None:
            # ad-hoc pair: the lexical vocabulary covers both sides
            if cfg.id == LEXICAL:
                return make_embedder(cfg, [question, text])
            return make_embedder(cfg)
        if state.corpus is None:
            raise HttpApiError(404, "no_corpus", "no corpus or index is configured")
        base = state.corpus_embedder if cfg == state.config.embedder else None
        embedder, _ = question_scoped_embedder(cfg, state.corpus, question, base=base)
        return embedder

    def _generator_for(generator_id: Optional[str]):
        if generator_id and generator_id != state.config.generator.id:
            return make_generator(dataclasses.replace(state.config.generator, id=generator_id))
        return state.generator

    def _explanation_response(explanation: Explanation) -> Response:
        key = state.store.put(explanation)
        _, canonical = state.store.get(key)
        return Response(
            content=canonical,
            media_type="application/json",
            headers={"X-Explanation-Id": key},
        )

    @app.get("/api/health")
    async def health():
        backends = []
        embedder_desc = (
            state.corpus_embedder.descriptor.to_json_dict()
            if state.corpus_embedder is not None
            else {
                "backend_id": state.config.embedder.backend_id or state.config.embedder.id,
                "kind": "embedder",
                "endpoint": state.config.embedder.endpoint,
                "model_name": state.config.embedder.model,
                "deterministic": True,
            }
        )
        embedder_desc["reachable"] = _probe_reachable(embedder_desc.get("endpoint"))
        backends.append(embedder_desc)
        generator_desc = state.generator.descriptor.to_json_dict()
        generator_desc["reachable"] = _probe_reachable(generator_desc.get("endpoint"))
        backends.append(generator_desc)
        return JSONResponse({"status": "ok", "backends": backends})

    @app.get("/api/config")
    async def get_config():
        return Response(
            content=canonical_json(state.config.redacted_dict()),
            media_type="application/json",
        )

    @app.post("/api/query")
    async def query(request: Request):
        body = await _body(request)
        question_text = _nonempty(_require_str(body, "question"), "question")
        k = _require_int(body, "k", state.config.rag.k)
        generator_id = _require_str(body, "generator", required=False)
        embedder_id = _require_str(body, "embedder", required=False)

        def work():
            embedder_cfg = None
            if embedder_id:
                embedder_cfg = dataclasses.replace(state.config.embedder, id=embedder_id)
            pipeline = state.pipeline(
                question_text,
                generator=_generator_for(generator_id) if generator_id else None,
                embedder_cfg=embedder_cfg,
            )
            result = pipeline.answer(Question(id="api", text=question_text), k=k)
            return {
                "question": {"id": result.question.id, "text": result.question.text},
                "retrieved": [
                    {
                        "id": doc.id,
                        "text": doc.text,
                        "metadata": dict(doc.metadata),
                        "score": score,
                    }
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

        payload = await run_in_threadpool(lambda: _with_timeout(work))
        return Response(content=canonical_json(payload), media_type="application/json")

    @app.post("/api/explain/retrieval")
    async def api_explain_retrieval(request: Request):
        body = await _body(request)
        question_text = _nonempty(_require_str(body, "question"), "question")
        document_id = _require_str(body, "document_id", required=False)
        text = _require_str(body, "text", required=False)
        if document_id is None and text is None:
            raise HttpApiError(400, "malformed_body", "one of 'document_id' or 'text' is required")
        if document_id is not None and text is not None:
            raise HttpApiError(400, "malformed_body", "'document_id' and 'text' are mutually exclusive")
        if text is not None:
            _nonempty(text, "text")

        config = state.config.explain
        strategy = _require_str(body, "strategy", required=False)
        if strategy:
            config = dataclasses.replace(config, strategy_id=strategy)
        granularity = _require_str(body, "granularity", required=False)
        if granularity:
            try:
                config = dataclasses.replace(config, granularity=Granularity(granularity))
            except ValueError:
                raise HttpApiError(400, "malformed_body", f"unknown granularity {granularity!r}")
        embedder_id = _require_str(body, "embedder", required=False)

        def work():
            question = Question(id="api", text=question_text)
            if text is not None:
                document = Document(id="adhoc", text=text)
                embedder = _embedder_for(question_text, text, embedder_id)
            else:
                if state.corpus is None:
                    raise HttpApiError(404, "no_corpus", "no corpus or index is configured")
                document = state.corpus.get(document_id)
                if document is None:
                    raise HttpApiError(404, "unknown_document", f"unknown document id {document_id!r}")
                embedder = _embedder_for(question_text, None, embedder_id)
            gated = _GatedBackend(embedder, state.gate)
            return explain_retrieval(question, document, gated, config)

        explanation = await run_in_threadpool(lambda: _with_timeout(work))
        return _explanation_response(explanation)

    @app.post("/api/explain/generation")
    async def api_explain_generation(request: Request):
        body = await _body(request)
        question_text = _require_str(body, "question", required=False)
        prompt_text = _require_str(body, "prompt", required=False)
        if question_text is None and prompt_text is None:
            raise HttpApiError(400, "malformed_body", "one of 'question' or 'prompt' is required")
        if question_text is not None:
            _nonempty(question_text, "question")
        if prompt_text is not None:
            _nonempty(prompt_text, "prompt")
        reference_text = _require_str(body, "reference_response", required=False)
        k = _require_int(body, "k", state.config.rag.k)

        config = state.config.explain
        comparator = _require_str(body, "comparator", required=False)
        if comparator:
            config = dataclasses.replace(config, comparator_id=comparator)
        include_instruction = body.get("include_instruction", False)
        if not isinstance(include_instruction, bool):
            raise HttpApiError(400, "malformed_body", "'include_instruction' must be a boolean")
        if include_instruction:
            config = dataclasses.replace(config, protect_instruction=False)
        strategy = _require_str(body, "strategy", required=False)
        if strategy:
            config = dataclasses.replace(config, strategy_id=strategy)
        generator_id = _require_str(body, "generator", required=False)

        def work():
            inner_generator = _generator_for(generator_id)
            generator = _GatedBackend(inner_generator, state.gate)
            comparators = comparator_registry(state.corpus_embedder)
            if prompt_text is not None:
                prompt = Prompt(
                    instruction="",
                    context_blocks=(),
                    question_text=question_text or "",
                    rendered=prompt_text,
                    protected_spans=(),
                )
                reference = None
                if reference_text is not None:
                    reference = GeneratedResponse(
                        text=reference_text,
                        backend_id="supplied",
                        settings_fingerprint="supplied",
                    )
                return explain_generation(
                    prompt,
                    generator,
                    config,
                    comparators=comparators,
                    reference_response=reference,
                )
            pipeline = state.pipeline(
                question_text,
                generator=inner_generator if generator_id else None,
            )
            result = pipeline.answer(Question(id="api", text=question_text), k=k)
            return explain_generation(
                result.prompt,
                generator,
                config,
                comparators=comparators,
                reference_response=result.response,
            )

        explanation = await run_in_threadpool(lambda: _with_timeout(work))
        return _explanation_response(explanation)

    @app.post("/api/perturbation/{explanation_key}/{feature_index}")
    async def api_perturbation(explanation_key: str, feature_index: int):
        item = state.store.get(explanation_key)
        if item is None:
            raise HttpApiError(404, "unknown_explanation", f"no explanation {explanation_key!r}")
        explanation, _ = item
        for fa in explanation.features:
            if fa.feature.index == feature_index:
                outcome = fa.outcome
                payload = {
                    "explanation_id": explanation_key,
                    "feature_index": feature_index,
                    "feature_text": fa.feature.text,
                    "weight": fa.weight,
                    "outcome": {
                        "feature_index": outcome.feature_index,
                        "kind": outcome.kind.value,
                        "perturbed_text": outcome.perturbed_text,
                        "similarity_to_reference": outcome.similarity_to_reference,
                        "raw_delta": outcome.raw_delta,
                        **(
                            {"score": outcome.score}
                            if outcome.score is not None
                            else {"response_text": outcome.response_text}
                        ),
                    },
                }
                return Response(content=canonical_json(payload), media_type="application/json")
        raise HttpApiError(404, "unknown_feature", f"no feature index {feature_index}")

    return app
