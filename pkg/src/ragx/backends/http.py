"""HTTP clients for OpenAI-compatible embedding and chat-completion servers.

Request bodies are canonical JSON (sorted keys, no spaces, UTF-8) so wire
tests can assert them bit-exactly. Retries: 3, with 250ms/1s/4s backoff,
fired only on transport errors and 429/5xx statuses; requests are
idempotent reads so a retry never duplicates side effects.
"""

from __future__ import annotations

import json
import os
import time
from typing import Callable, List, Optional, Sequence

import requests

from ..core import BackendDescriptor, GeneratedResponse, stable_digest
from ..errors import BackendProtocolError, BackendUnavailable, PreconditionError
from .vectors import EmbeddingVector, unit_normalize, zero_vector

API_KEY_ENV = "RAGX_API_KEY"
EMBED_BATCH_SIZE = 64
RETRY_BACKOFFS = (0.25, 1.0, 4.0)

# text used to discover the embedding dimension when a batch is all-empty
_DIMENSION_PROBE_TEXT = "."


def encode_body(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )


def _is_retryable_status(status: int) -> bool:
    return status == 429 or 500 <= status <= 599


class _JsonHttpClient:
    def __init__(
        self,
        endpoint: str,
        api_key: Optional[str] = None,
        session=None,
        sleep: Callable[[float], None] = time.sleep,
        timeout: float = 120.0,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.session = session or requests.Session()
        self.sleep = sleep
        self.timeout = timeout

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def post_json(self, path: str, payload: dict) -> dict:
        url = self.endpoint + path
        body = encode_body(payload)
        last_error = None
        for attempt in range(1 + len(RETRY_BACKOFFS)):
            if attempt > 0:
                self.sleep(RETRY_BACKOFFS[attempt - 1])
            try:
                response = self.session.post(
                    url, data=body, headers=self._headers(), timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = f"transport error: {exc}"
                continue
            status = response.status_code
            if 200 <= status < 300:
                try:
                    return response.json()
                except ValueError as exc:
                    raise BackendProtocolError(f"{url}: invalid JSON response: {exc}") from exc
            if _is_retryable_status(status):
                last_error = f"status {status}"
                continue
            raise BackendProtocolError(f"{url}: status {status}: {_remote_message(response)}")
        raise BackendUnavailable(f"{url}: giving up after retries ({last_error})")


def _remote_message(response) -> str:
    try:
        data = response.json()
    except ValueError:
        return response.text[:500]
    if isinstance(data, dict):
        error = data.get("error")
        if isinstance(error, dict) and "message" in error:
            return str(error["message"])
        if isinstance(error, str):
            return error
    return json.dumps(data)[:500]


class OpenAIEmbeddingClient(_JsonHttpClient):
    """Client for POST {endpoint}/embeddings."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        backend_id: str = "http-embedder",
        deterministic: bool = True,
        **kwargs,
    ):
        super().__init__(endpoint, **kwargs)
        self.model = model
        self.descriptor = BackendDescriptor(
            backend_id=backend_id,
            kind="embedder",
            endpoint=self.endpoint,
            model_name=model,
            deterministic=deterministic,
        )
        self._dimension: Optional[int] = None

    def embed(self, texts: Sequence[str]) -> List[EmbeddingVector]:
        if not texts:
            raise PreconditionError("embed requires at least one text")
        out: List[Optional[EmbeddingVector]] = [None] * len(texts)
        pending = [(i, t) for i, t in enumerate(texts) if t != ""]
        for start in range(0, len(pending), EMBED_BATCH_SIZE):
            batch = pending[start : start + EMBED_BATCH_SIZE]
            vectors = self._embed_batch([t for _, t in batch])
            for (i, _), vec in zip(batch, vectors):
                out[i] = vec
        if any(v is None for v in out):
            if self._dimension is None:
                # all-empty input: one probe call discovers the dimension
                self._embed_batch([_DIMENSION_PROBE_TEXT])
            out = [v if v is not None else zero_vector(self._dimension) for v in out]
        return list(out)

    def _embed_batch(self, batch: List[str]) -> List[EmbeddingVector]:
        data = self.post_json("/embeddings", {"model": self.model, "input": list(batch)})
        rows = data.get("data")
        if not isinstance(rows, list) or len(rows) != len(batch):
            raise BackendProtocolError(
                f"embeddings response carries {0 if not isinstance(rows, list) else len(rows)} "
                f"rows for {len(batch)} inputs"
            )
        try:
            ordered = sorted(rows, key=lambda r: r["index"])
            raw = [[float(x) for x in r["embedding"]] for r in ordered]
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendProtocolError(f"malformed embeddings response: {exc}") from exc
        dims = {len(v) for v in raw}
        if len(dims) != 1:
            raise BackendProtocolError(f"inconsistent embedding dimensions in batch: {sorted(dims)}")
        dim = dims.pop()
        if self._dimension is None:
            self._dimension = dim
        elif self._dimension != dim:
            raise BackendProtocolError(
                f"embedding dimension changed from {self._dimension} to {dim}"
            )
        return [unit_normalize(v) for v in raw]


class OpenAIChatClient(_JsonHttpClient):
    """Client for POST {endpoint}/chat/completions; temperature pinned to 0."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        backend_id: str = "http-generator",
        deterministic: bool = False,
        seed: Optional[int] = None,
        **kwargs,
    ):
        super().__init__(endpoint, **kwargs)
        self.model = model
        self.seed = seed
        self.descriptor = BackendDescriptor(
            backend_id=backend_id,
            kind="generator",
            endpoint=self.endpoint,
            model_name=model,
            deterministic=deterministic,
        )
        self._settings_fingerprint = stable_digest(
            {"endpoint": self.endpoint, "model": model, "temperature": 0, "seed": seed}
        )[:16]

    def generate(self, prompt_text: str) -> GeneratedResponse:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt_text}],
            "temperature": 0,
        }
        if self.seed is not None:
            payload["seed"] = self.seed
        data = self.post_json("/chat/completions", payload)
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendProtocolError(f"malformed chat response: {exc}: {json.dumps(data)[:300]}") from exc
        if text is None:
            text = ""
        if not isinstance(text, str):
            raise BackendProtocolError(f"chat content is not a string: {type(text).__name__}")
        return GeneratedResponse(
            text=text,
            backend_id=self.descriptor.backend_id,
            settings_fingerprint=self._settings_fingerprint,
        )
