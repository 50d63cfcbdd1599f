"""Token normalization and overlap scoring shared by comparators, the
mock generator and answer-correctness metrics.

Normalization: lowercase, strip ASCII punctuation, split on whitespace.
Articles are kept; whether stopwords matter is exactly what perturbation
should reveal.
"""

from __future__ import annotations

import string
from collections import Counter
from typing import List

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_text(text: str) -> str:
    return " ".join(text.lower().translate(_PUNCT_TABLE).split())


def normalize_tokens(text: str) -> List[str]:
    return text.lower().translate(_PUNCT_TABLE).split()


def token_f1(a: str, b: str) -> float:
    """Multiset token-level F1 of two texts; 1.0 iff equal token multisets."""
    ta, tb = normalize_tokens(a), normalize_tokens(b)
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    overlap = sum((Counter(ta) & Counter(tb)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(tb)
    recall = overlap / len(ta)
    return 2 * precision * recall / (precision + recall)
