"""Perturbation strategies producing what-if variants of a source text.

Leave-one-out is the workhorse; mask and duplicate are optional extras
behind the same interface. The registry is keyed by string id so the CLI
and service can select strategies by name.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

from .core import Feature, PerturbedInput, Span, spans_overlap
from .errors import NoFeatures, UnknownStrategy

MASK_TOKEN = "[MASK]"

StrategyFn = Callable[[str, Sequence[Feature], Sequence[Span]], List[PerturbedInput]]


def _splice(source: str, span: Span, replacement: str) -> str:
    """Replace ``span`` with ``replacement``; collapse whitespace doubled by
    an empty replacement and trim the result."""
    start, end = span
    left, right = source[:start], source[end:]
    if not replacement:
        i = len(left)
        while i > 0 and left[i - 1].isspace():
            i -= 1
        j = 0
        while j < len(right) and right[j].isspace():
            j += 1
        if i < len(left) and j > 0:
            # whitespace met whitespace at the junction: keep a single space
            return (left[:i] + " " + right[j:]).strip()
        return (left + right).strip()
    return (left + replacement + right).strip()


def _unprotected(features: Sequence[Feature], protected_spans: Sequence[Span]) -> List[Feature]:
    return [
        f
        for f in features
        if not any(spans_overlap(f.span, p) for p in protected_spans)
    ]


def _apply(
    source: str,
    features: Sequence[Feature],
    protected_spans: Sequence[Span],
    strategy_id: str,
    replacement: str,
) -> List[PerturbedInput]:
    if not features:
        raise NoFeatures("no features to perturb")
    return [
        PerturbedInput(
            feature_index=f.index,
            text=_splice(source, f.span, replacement),
            strategy_id=strategy_id,
        )
        for f in _unprotected(features, protected_spans)
    ]


def leave_one_out(
    source: str,
    features: Sequence[Feature],
    protected_spans: Sequence[Span] = (),
) -> List[PerturbedInput]:
    """One variant per unprotected feature with that feature removed."""
    return _apply(source, features, protected_spans, "leave_one_out", "")


def mask_feature(
    source: str,
    features: Sequence[Feature],
    protected_spans: Sequence[Span] = (),
    mask_token: str = MASK_TOKEN,
) -> List[PerturbedInput]:
    """Like leave-one-out but the feature is replaced by ``mask_token``.

    An empty mask token degenerates to removal, whitespace collapse included.
    """
    return _apply(source, features, protected_spans, "mask", mask_token)


def duplicate_feature(
    source: str,
    features: Sequence[Feature],
    protected_spans: Sequence[Span] = (),
) -> List[PerturbedInput]:
    """Repeat the feature in place; probes sensitivity to redundancy."""
    if not features:
        raise NoFeatures("no features to perturb")
    return [
        PerturbedInput(
            feature_index=f.index,
            text=_splice(source, f.span, f.text + " " + f.text),
            strategy_id="duplicate",
        )
        for f in _unprotected(features, protected_spans)
    ]


@dataclass(frozen=True)
class StrategyEntry:
    strategy_id: str
    description: str
    fn: StrategyFn


_REGISTRY: Dict[str, StrategyEntry] = {}


def register_strategy(strategy_id: str, description: str, fn: StrategyFn) -> None:
    _REGISTRY[strategy_id] = StrategyEntry(strategy_id, description, fn)


def get_strategy(strategy_id: str) -> StrategyEntry:
    try:
        return _REGISTRY[strategy_id]
    except KeyError:
        raise UnknownStrategy(f"unknown perturbation strategy: {strategy_id!r}") from None


def list_strategies() -> List[Tuple[str, str]]:
    return [(e.strategy_id, e.description) for e in _REGISTRY.values()]


register_strategy(
    "leave_one_out", "remove one feature at a time (default)", leave_one_out
)
register_strategy(
    "mask", f"replace one feature at a time with {MASK_TOKEN}", mask_feature
)
register_strategy(
    "duplicate", "repeat one feature at a time", duplicate_feature
)
# short alias used by the CLI surface
register_strategy("loo", "alias for leave_one_out", leave_one_out)
