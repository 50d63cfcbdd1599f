"""Embedding vectors and cosine scoring.

Vectors are unit-normalized at construction; the all-zero vector is the
designated representation of empty text and compares as 0.0 against
everything, including itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from ..errors import DimensionError, PreconditionError

_NORM_TOL = 1e-6


@dataclass(frozen=True)
class EmbeddingVector:
    values: Tuple[float, ...]

    def __post_init__(self):
        norm_sq = 0.0
        for v in self.values:
            if not math.isfinite(v):
                raise PreconditionError(f"non-finite embedding component: {v!r}")
            norm_sq += v * v
        if norm_sq != 0.0 and abs(math.sqrt(norm_sq) - 1.0) > _NORM_TOL:
            raise PreconditionError(f"embedding norm {math.sqrt(norm_sq)} is not 1 or 0")

    @property
    def dimension(self) -> int:
        return len(self.values)

    @property
    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.values)


def zero_vector(dimension: int) -> EmbeddingVector:
    return EmbeddingVector(values=(0.0,) * dimension)


def unit_normalize(values: Sequence[float]) -> EmbeddingVector:
    """L2-normalize; an all-zero input stays the zero vector.

    hypot keeps the norm accurate when components are tiny enough that
    their squares would underflow.
    """
    norm = math.hypot(*values)
    if norm == 0.0:
        return EmbeddingVector(values=tuple(0.0 for _ in values))
    return EmbeddingVector(values=tuple(v / norm for v in values))


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity, 0.0 when either side is the zero vector."""
    if a.dimension != b.dimension:
        raise DimensionError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    if a.is_zero or b.is_zero:
        return 0.0
    dot = sum(x * y for x, y in zip(a.values, b.values))
    norm_a = math.sqrt(sum(x * x for x in a.values))
    norm_b = math.sqrt(sum(y * y for y in b.values))
    return max(-1.0, min(1.0, dot / (norm_a * norm_b)))
