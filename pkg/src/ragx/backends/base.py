"""Structural interfaces every embedder / generator backend satisfies."""

from __future__ import annotations

from typing import List, Protocol, Sequence, runtime_checkable

from ..core import BackendDescriptor, GeneratedResponse
from .vectors import EmbeddingVector


@runtime_checkable
class Embedder(Protocol):
    descriptor: BackendDescriptor

    def embed(self, texts: Sequence[str]) -> List[EmbeddingVector]:
        """One unit-normalized vector per text, in order; "" maps to zero."""
        ...


@runtime_checkable
class Generator(Protocol):
    descriptor: BackendDescriptor

    def generate(self, prompt_text: str) -> GeneratedResponse:
        ...
