"""Black-box embedder and generator backends.

Local deterministic reference implementations live next to HTTP clients
for OpenAI-compatible servers; everything satisfies the same structural
interfaces.
"""

from ..core import BackendDescriptor
from .base import Embedder, Generator
from .cache import CachedEmbedder, CachedGenerator
from .http import (
    API_KEY_ENV,
    OpenAIChatClient,
    OpenAIEmbeddingClient,
    encode_body,
)
from .local import (
    ConstantGenerator,
    ExtractiveMockGenerator,
    LocalLexicalEmbedder,
    lexical_tokens,
)
from .vectors import EmbeddingVector, cosine, unit_normalize, zero_vector

__all__ = [
    "API_KEY_ENV",
    "BackendDescriptor",
    "CachedEmbedder",
    "CachedGenerator",
    "ConstantGenerator",
    "Embedder",
    "EmbeddingVector",
    "ExtractiveMockGenerator",
    "Generator",
    "LocalLexicalEmbedder",
    "OpenAIChatClient",
    "OpenAIEmbeddingClient",
    "cosine",
    "encode_body",
    "lexical_tokens",
    "unit_normalize",
    "zero_vector",
]
