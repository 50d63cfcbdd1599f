"""Split text into ordered, span-annotated features.

Word features are maximal runs of non-whitespace characters (attached
punctuation stays with the token). Sentence boundaries are rule-based:
after '.', '!' or '?' followed by whitespace, and at newlines. There is
deliberately no abbreviation dictionary ("Dr. Smith" splits wrongly);
determinism beats splitter accuracy here.
"""

from __future__ import annotations

import re
from typing import List

from .core import Feature, Granularity
from .errors import EmptyInput

_WORD_RE = re.compile(r"\S+")
_SENTENCE_END_RE = re.compile(r"[.!?](?=\s)")


def decompose_words(text: str) -> List[Feature]:
    """Tokenize into whitespace-delimited word features with exact spans."""
    if not text.strip():
        raise EmptyInput("cannot decompose empty or whitespace-only text")
    return [
        Feature(index=i, text=m.group(), span=(m.start(), m.end()), granularity=Granularity.WORD)
        for i, m in enumerate(_WORD_RE.finditer(text))
    ]


def decompose_sentences(text: str) -> List[Feature]:
    """Split into sentence features; a trailing unterminated fragment counts."""
    if not text.strip():
        raise EmptyInput("cannot decompose empty or whitespace-only text")

    cuts = {m.end() for m in _SENTENCE_END_RE.finditer(text)}
    cuts.update(i + 1 for i, ch in enumerate(text) if ch == "\n")
    cuts.add(len(text))

    features: List[Feature] = []
    start = 0
    for cut in sorted(cuts):
        segment = text[start:cut]
        trimmed = segment.strip()
        if trimmed:
            lead = len(segment) - len(segment.lstrip())
            span = (start + lead, start + lead + len(trimmed))
            features.append(
                Feature(
                    index=len(features),
                    text=trimmed,
                    span=span,
                    granularity=Granularity.SENTENCE,
                )
            )
        start = cut
    return features


def decompose(text: str, granularity: Granularity) -> List[Feature]:
    if granularity is Granularity.WORD:
        return decompose_words(text)
    return decompose_sentences(text)
