"""Structured app configuration for the CLI and the HTTP service.

One JSON file with [embedder], [generator], [explain], [service] and [rag]
sections; RAGX_API_KEY in the environment overrides any api_key in the
file. Unknown keys are rejected early, typos bite at startup rather than
mid-run.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional

from .backends import (
    API_KEY_ENV,
    ConstantGenerator,
    ExtractiveMockGenerator,
    LocalLexicalEmbedder,
    OpenAIChatClient,
    OpenAIEmbeddingClient,
)
from .core import ExplainerConfig, Granularity
from .errors import PreconditionError
from .rag import DEFAULT_K, DEFAULT_TEMPLATE

LEXICAL = "lexical"
HTTP = "http"
EXTRACTIVE = "extractive"
CONSTANT = "constant"


@dataclass(frozen=True)
class BackendConfig:
    id: str = LEXICAL
    endpoint: Optional[str] = None
    model: Optional[str] = None
    backend_id: Optional[str] = None
    api_key: Optional[str] = None
    deterministic: Optional[bool] = None
    text: Optional[str] = None  # fixed output of the constant generator
    seed: Optional[int] = None

    def redacted(self) -> dict:
        data = {k: v for k, v in self.__dict__.items() if v is not None}
        if "api_key" in data:
            data["api_key"] = "***"
        return data


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8080
    cors_origins: List[str] = field(default_factory=lambda: ["*"])
    timeout_seconds: float = 120.0
    lru_capacity: int = 128
    max_inflight: int = 32


@dataclass(frozen=True)
class RagConfig:
    corpus: Optional[str] = None
    index: Optional[str] = None
    template: str = DEFAULT_TEMPLATE
    k: int = DEFAULT_K


@dataclass(frozen=True)
class AppConfig:
    embedder: BackendConfig = field(default_factory=BackendConfig)
    generator: BackendConfig = field(default_factory=lambda: BackendConfig(id=EXTRACTIVE))
    explain: ExplainerConfig = field(default_factory=ExplainerConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)
    rag: RagConfig = field(default_factory=RagConfig)

    def redacted_dict(self) -> dict:
        return {
            "embedder": self.embedder.redacted(),
            "generator": self.generator.redacted(),
            "explain": {
                "granularity": self.explain.granularity.value if self.explain.granularity else None,
                "strategy_id": self.explain.strategy_id,
                "comparator_id": self.explain.comparator_id,
                "parallelism": self.explain.parallelism,
                "top_k_render": self.explain.top_k_render,
                "protect_instruction": self.explain.protect_instruction,
            },
            "service": {
                "port": self.service.port,
                "cors_origins": list(self.service.cors_origins),
                "timeout_seconds": self.service.timeout_seconds,
                "lru_capacity": self.service.lru_capacity,
                "max_inflight": self.service.max_inflight,
            },
            "rag": {
                "corpus": self.rag.corpus,
                "index": self.rag.index,
                "template": self.rag.template,
                "k": self.rag.k,
            },
        }


def _section(data: dict, name: str, cls, defaults: Optional[dict] = None):
    raw = dict(data.get(name, {}))
    for key, value in (defaults or {}).items():
        raw.setdefault(key, value)
    allowed = set(cls.__dataclass_fields__)
    unknown = set(raw) - allowed
    if unknown:
        raise PreconditionError(f"unknown keys in [{name}] config: {sorted(unknown)}")
    return cls(**raw)


def _explain_section(data: dict) -> ExplainerConfig:
    raw = dict(data.get("explain", {}))
    granularity = raw.pop("granularity", None)
    if isinstance(granularity, str):
        granularity = Granularity(granularity)
    allowed = {"strategy_id", "comparator_id", "parallelism", "top_k_render", "protect_instruction"}
    unknown = set(raw) - allowed
    if unknown:
        raise PreconditionError(f"unknown keys in [explain] config: {sorted(unknown)}")
    return ExplainerConfig(granularity=granularity, **raw)


def load_config(path=None) -> AppConfig:
    if path is None:
        return AppConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise PreconditionError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PreconditionError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise PreconditionError(f"config {path} must be a JSON object")
    return AppConfig(
        embedder=_section(data, "embedder", BackendConfig),
        generator=_section(data, "generator", BackendConfig, defaults={"id": EXTRACTIVE}),
        explain=_explain_section(data),
        service=_section(data, "service", ServiceConfig),
        rag=_section(data, "rag", RagConfig),
    )


def _api_key(cfg: BackendConfig) -> Optional[str]:
    return os.environ.get(API_KEY_ENV) or cfg.api_key


def make_embedder(cfg: BackendConfig, vocabulary_texts=None):
    """Instantiate the configured embedder.

    The lexical embedder needs vocabulary texts: the corpus when one is
    loaded, otherwise the ad-hoc question/document pair under explanation.
    """
    if cfg.id == LEXICAL:
        if not vocabulary_texts:
            raise PreconditionError("lexical embedder needs vocabulary texts (a corpus or ad-hoc inputs)")
        return LocalLexicalEmbedder.from_texts(
            vocabulary_texts, backend_id=cfg.backend_id or LEXICAL
        )
    if cfg.id == HTTP:
        if not cfg.endpoint or not cfg.model:
            raise PreconditionError("http embedder needs 'endpoint' and 'model'")
        return OpenAIEmbeddingClient(
            endpoint=cfg.endpoint,
            model=cfg.model,
            backend_id=cfg.backend_id or "http-embedder",
            deterministic=cfg.deterministic if cfg.deterministic is not None else True,
            api_key=_api_key(cfg),
        )
    raise PreconditionError(f"unknown embedder id: {cfg.id!r}")


def make_generator(cfg: BackendConfig):
    if cfg.id == EXTRACTIVE:
        return ExtractiveMockGenerator(backend_id=cfg.backend_id or "extractive-mock")
    if cfg.id == CONSTANT:
        return ConstantGenerator(text=cfg.text or "ok", backend_id=cfg.backend_id or CONSTANT)
    if cfg.id == HTTP:
        if not cfg.endpoint or not cfg.model:
            raise PreconditionError("http generator needs 'endpoint' and 'model'")
        return OpenAIChatClient(
            endpoint=cfg.endpoint,
            model=cfg.model,
            backend_id=cfg.backend_id or "http-generator",
            deterministic=cfg.deterministic if cfg.deterministic is not None else False,
            seed=cfg.seed,
            api_key=_api_key(cfg),
        )
    raise PreconditionError(f"unknown generator id: {cfg.id!r}")


def question_scoped_embedder(cfg: BackendConfig, corpus, question_text: str, base=None):
    """Embedder to score one question against a corpus.

    The lexical embedder folds the question into its vocabulary (documents
    only gain zero coordinates, so their geometry is unchanged, but the
    question's out-of-corpus tokens still count toward its norm). Returns
    (embedder, index_reusable): a False flag means any prebuilt index must
    be rebuilt with the returned embedder.
    """
    if cfg.id == LEXICAL:
        texts = [d.text for d in corpus.documents]
        texts.append(question_text)
        return make_embedder(cfg, texts), False
    return (base if base is not None else make_embedder(cfg)), True


def apply_cli_overrides(
    config: AppConfig,
    embedder_id: Optional[str] = None,
    generator_id: Optional[str] = None,
    parallelism: Optional[int] = None,
) -> AppConfig:
    embedder = replace(config.embedder, id=embedder_id) if embedder_id else config.embedder
    generator = replace(config.generator, id=generator_id) if generator_id else config.generator
    explain = (
        replace(config.explain, parallelism=parallelism) if parallelism else config.explain
    )
    return replace(config, embedder=embedder, generator=generator, explain=explain)
