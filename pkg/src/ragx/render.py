"""Canonical serialization and color-scaled renderings of explanations.

The JSON form is canonical — sorted keys, floats at 9 significant digits,
UTF-8, newline-terminated — so golden files and cross-interface diffs are
byte-stable. ANSI uses five discrete heat buckets; HTML interpolates
white to red. Both mappings are monotone in weight.
"""

from __future__ import annotations

import hashlib
import html as html_lib
import json
import math
from typing import List, Optional, Tuple

from .core import (
    BackendDescriptor,
    Explanation,
    Feature,
    FeatureAttribution,
    Granularity,
    OutcomeKind,
    PerturbationOutcome,
    Target,
)
from .errors import PreconditionError

SCHEMA_VERSION = 1

ANSI_RESET = "\x1b[0m"
# bucket lower bounds paired with SGR codes; weights below 0.2 stay unstyled
ANSI_BUCKETS: Tuple[Tuple[float, str], ...] = (
    (0.8, "\x1b[41;97m"),  # red background
    (0.6, "\x1b[93m"),     # bright yellow
    (0.4, "\x1b[33m"),     # yellow
    (0.2, "\x1b[2;33m"),   # dim yellow
)


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        raise PreconditionError(f"cannot serialize non-finite float {x!r}")
    if x == 0.0:
        return "0"
    return format(x, ".9g")


def _emit(value) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _format_float(value)
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_emit(v) for v in value) + "]"
    if isinstance(value, dict):
        items = sorted(value.items())
        return "{" + ",".join(json.dumps(k) + ":" + _emit(v) for k, v in items) + "}"
    raise PreconditionError(f"cannot serialize {type(value).__name__}")


def canonical_json(value) -> str:
    """Canonical JSON (sorted keys, 9-significant-digit floats) for any
    JSON-ready value; newline-terminated."""
    return _emit(value) + "\n"


def _outcome_dict(outcome: PerturbationOutcome) -> dict:
    data = {
        "feature_index": outcome.feature_index,
        "kind": outcome.kind.value,
        "perturbed_text": outcome.perturbed_text,
        "similarity_to_reference": outcome.similarity_to_reference,
        "raw_delta": outcome.raw_delta,
    }
    if outcome.kind is OutcomeKind.RETRIEVAL_SCORE:
        data["score"] = outcome.score
    else:
        data["response_text"] = outcome.response_text
    return data


def to_canonical_json(explanation: Explanation) -> str:
    if explanation.target is Target.RETRIEVAL:
        reference = {"score": explanation.reference_score}
    else:
        reference = {"response": explanation.reference_response}
    doc = {
        "schema_version": SCHEMA_VERSION,
        "target": explanation.target.value,
        "granularity": explanation.granularity.value,
        "source_text": explanation.source_text,
        "reference": reference,
        "backend": explanation.backend.to_json_dict(),
        "config_fingerprint": explanation.config_fingerprint,
        "warnings": list(explanation.warnings),
        "features": [
            {
                "index": fa.feature.index,
                "text": fa.feature.text,
                "span": [fa.feature.span[0], fa.feature.span[1]],
                "weight": fa.weight,
                "raw_delta": fa.raw_delta,
                "outcome": _outcome_dict(fa.outcome),
            }
            for fa in explanation.features
        ],
    }
    return _emit(doc) + "\n"


def from_canonical_json(text: str) -> Explanation:
    data = json.loads(text)
    if data.get("schema_version") != SCHEMA_VERSION:
        raise PreconditionError(f"unsupported schema_version: {data.get('schema_version')!r}")
    target = Target(data["target"])
    granularity = Granularity(data["granularity"])
    features = []
    for row in data["features"]:
        outcome_data = row["outcome"]
        kind = OutcomeKind(outcome_data["kind"])
        outcome = PerturbationOutcome(
            feature_index=int(outcome_data["feature_index"]),
            kind=kind,
            perturbed_text=outcome_data["perturbed_text"],
            similarity_to_reference=float(outcome_data["similarity_to_reference"]),
            raw_delta=float(outcome_data["raw_delta"]),
            score=(
                float(outcome_data["score"]) if kind is OutcomeKind.RETRIEVAL_SCORE else None
            ),
            response_text=(
                outcome_data["response_text"] if kind is OutcomeKind.GENERATED_TEXT else None
            ),
        )
        features.append(
            FeatureAttribution(
                feature=Feature(
                    index=int(row["index"]),
                    text=row["text"],
                    span=(int(row["span"][0]), int(row["span"][1])),
                    granularity=granularity,
                ),
                weight=float(row["weight"]),
                raw_delta=float(row["raw_delta"]),
                outcome=outcome,
            )
        )
    reference = data["reference"]
    return Explanation(
        target=target,
        source_text=data["source_text"],
        granularity=granularity,
        features=tuple(features),
        config_fingerprint=data["config_fingerprint"],
        backend=BackendDescriptor.from_json_dict(data["backend"]),
        reference_score=(float(reference["score"]) if target is Target.RETRIEVAL else None),
        reference_response=(reference["response"] if target is Target.GENERATION else None),
        warnings=tuple(data.get("warnings", [])),
    )


def explanation_id(explanation: Explanation) -> str:
    """Content digest of the canonical form; equal explanations share ids."""
    return hashlib.sha256(to_canonical_json(explanation).encode("utf-8")).hexdigest()


def _styled_indices(explanation: Explanation, top_k: Optional[int]) -> set:
    if top_k is None:
        return {fa.feature.index for fa in explanation.features}
    return {fa.feature.index for fa in explanation.top_k(top_k)}


def ansi_code_for_weight(weight: float) -> Optional[str]:
    for lower, code in ANSI_BUCKETS:
        if weight >= lower:
            return code
    return None


def render_ansi(explanation: Explanation, top_k: Optional[int] = None) -> str:
    """Source text with feature spans wrapped in SGR heat codes.

    Stripping all escape codes recovers the source text exactly.
    """
    styled = _styled_indices(explanation, top_k)
    out: List[str] = []
    cursor = 0
    for fa in explanation.features:
        start, end = fa.feature.span
        out.append(explanation.source_text[cursor:start])
        code = ansi_code_for_weight(fa.weight) if fa.feature.index in styled else None
        if code:
            out.append(code + explanation.source_text[start:end] + ANSI_RESET)
        else:
            out.append(explanation.source_text[start:end])
        cursor = end
    out.append(explanation.source_text[cursor:])
    return "".join(out)


def heat_color(weight: float) -> str:
    """White-to-red interpolation; monotone in weight."""
    channel = round(255 * (1.0 - weight))
    return f"rgb(255,{channel},{channel})"


def _tooltip(fa: FeatureAttribution) -> str:
    if fa.outcome.kind is OutcomeKind.RETRIEVAL_SCORE:
        what_if = f"score={_format_float(fa.outcome.score)}"
    else:
        excerpt = fa.outcome.response_text or ""
        if len(excerpt) > 160:
            excerpt = excerpt[:157] + "..."
        what_if = f"output={excerpt}"
    return f"weight={fa.weight:.4f} raw_delta={fa.raw_delta:+.4f} {what_if}"


_HTML_PAGE = """<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>ragx explanation</title>
<style>
body {{ font-family: sans-serif; margin: 2rem; color: #222; }}
.meta {{ margin-bottom: 1rem; font-size: 0.9rem; color: #555; }}
.heatmap {{ white-space: pre-wrap; line-height: 1.8; border: 1px solid #ddd; padding: 1rem; }}
.feature {{ border-radius: 3px; padding: 0 1px; }}
.legend {{ margin-top: 1rem; font-size: 0.85rem; }}
.legend span {{ padding: 0 0.6rem; margin-right: 0.3rem; }}
</style>
</head>
<body>
<div class="meta">{meta}</div>
<div class="heatmap">{heatmap}</div>
<div class="legend">weight scale: {legend}</div>
</body>
</html>
"""


def render_html(explanation: Explanation, top_k: Optional[int] = None) -> str:
    """Self-contained HTML heatmap; hover shows weight, delta and the
    what-if output."""
    styled = _styled_indices(explanation, top_k)
    parts: List[str] = []
    cursor = 0
    for fa in explanation.features:
        start, end = fa.feature.span
        parts.append(html_lib.escape(explanation.source_text[cursor:start]))
        body = html_lib.escape(explanation.source_text[start:end])
        if fa.feature.index in styled:
            color = heat_color(fa.weight)
            title = html_lib.escape(_tooltip(fa), quote=True)
            parts.append(
                f'<span class="feature" style="background-color: {color}" title="{title}">'
                f"{body}</span>"
            )
        else:
            parts.append(body)
        cursor = end
    parts.append(html_lib.escape(explanation.source_text[cursor:]))

    if explanation.target is Target.RETRIEVAL:
        ref = f"reference score {_format_float(explanation.reference_score)}"
    else:
        ref = f"reference response: {html_lib.escape(explanation.reference_response or '')}"
    meta = (
        f"target={explanation.target.value} granularity={explanation.granularity.value} "
        f"backend={html_lib.escape(explanation.backend.backend_id)} | {ref}"
    )
    legend = "".join(
        f'<span style="background-color: {heat_color(w)}">{w:.2f}</span>'
        for w in (0.0, 0.25, 0.5, 0.75, 1.0)
    )
    return _HTML_PAGE.format(meta=meta, heatmap="".join(parts), legend=legend)
