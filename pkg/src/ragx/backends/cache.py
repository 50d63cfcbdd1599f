"""Per-run response caches so duplicate perturbations hit a backend once.

Keys are exact input texts; identity of backend and model is fixed per
wrapper instance, so (backend_id, model, text) is the effective key. Safe
under the explainer's concurrent fan-out: a missing generation key is
claimed with a future before the backend call, so concurrent duplicates
wait instead of re-calling.
"""

from __future__ import annotations

import threading
from concurrent.futures import Future
from typing import Dict, List, Sequence

from ..core import GeneratedResponse
from .vectors import EmbeddingVector


class CachedEmbedder:
    def __init__(self, inner):
        self.inner = inner
        self.descriptor = inner.descriptor
        self._lock = threading.Lock()
        self._memo: Dict[str, EmbeddingVector] = {}
        self.backend_calls = 0

    def embed(self, texts: Sequence[str]) -> List[EmbeddingVector]:
        with self._lock:
            missing = []
            seen = set()
            for t in texts:
                if t not in self._memo and t not in seen:
                    missing.append(t)
                    seen.add(t)
            if missing:
                self.backend_calls += 1
                for t, vec in zip(missing, self.inner.embed(missing)):
                    self._memo[t] = vec
            return [self._memo[t] for t in texts]


class CachedGenerator:
    def __init__(self, inner):
        self.inner = inner
        self.descriptor = inner.descriptor
        self._lock = threading.Lock()
        self._futures: Dict[str, Future] = {}
        self.backend_calls = 0

    def generate(self, prompt_text: str) -> GeneratedResponse:
        with self._lock:
            future = self._futures.get(prompt_text)
            if future is None:
                future = Future()
                self._futures[prompt_text] = future
                owner = True
            else:
                owner = False
        if owner:
            try:
                self.backend_calls += 1
                result = self.inner.generate(prompt_text)
            except BaseException as exc:
                future.set_exception(exc)
                raise
            future.set_result(result)
            return result
        return future.result()
