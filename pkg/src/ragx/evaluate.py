"""Evaluation of explanations against human annotations.

Metrics: completeness (fraction of annotated features recovered in the
top-k), precision/recall/F1 of predicted vs annotated feature sets, answer
correctness, and Spearman correlation between explanation intuitiveness
and downstream answer quality. The module ships the metrics; the original
annotation data behind any published numbers is not reproducible here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple

from scipy import stats

from .core import Document, Explanation, ExplainerConfig, Prompt, Question, Span, Target
from .errors import AnnotationMismatch, IngestError, RagxError, UndefinedMetric
from .explain import Comparator, explain_generation, explain_retrieval
from .textnorm import normalize_text, token_f1


@dataclass(frozen=True)
class AnnotationRecord:
    """One human-annotated case: which spans of the source mattered."""

    case_id: str
    target: Target
    source_text: str
    annotated_spans: Tuple[Span, ...]
    question: Optional[str] = None
    gold_answer: Optional[str] = None

    def __post_init__(self):
        prev_end = -1
        for start, end in self.annotated_spans:
            if not (0 <= start < end <= len(self.source_text)):
                raise AnnotationMismatch(
                    f"{self.case_id}: span [{start},{end}) out of bounds"
                )
            if start < prev_end:
                raise AnnotationMismatch(f"{self.case_id}: annotated spans overlap")
            prev_end = end


@dataclass(frozen=True)
class CaseMetrics:
    case_id: str
    target: Target
    completeness: float
    precision: float
    recall: float
    f1: float
    answer_exact: Optional[int] = None
    answer_f1: Optional[float] = None

    def to_json_dict(self) -> dict:
        data = {
            "case_id": self.case_id,
            "target": self.target.value,
            "completeness": self.completeness,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }
        if self.answer_f1 is not None:
            data["answer_exact"] = self.answer_exact
            data["answer_f1"] = self.answer_f1
        return data


@dataclass
class EvalReport:
    cases: List[CaseMetrics] = field(default_factory=list)
    failures: List[Tuple[str, str, str]] = field(default_factory=list)  # (case_id, code, message)
    completeness_mean: float = 0.0
    precision_mean: float = 0.0
    recall_mean: float = 0.0
    f1_mean: float = 0.0
    correlation: Optional[float] = None
    case_count: int = 0

    def to_json_dict(self) -> dict:
        aggregates = {
            "case_count": self.case_count,
            "completeness_mean": self.completeness_mean,
            "precision_mean": self.precision_mean,
            "recall_mean": self.recall_mean,
            "f1_mean": self.f1_mean,
        }
        if self.correlation is not None:
            aggregates["correlation"] = self.correlation
        return {
            "aggregates": aggregates,
            "cases": [c.to_json_dict() for c in self.cases],
            "failures": [
                {"case_id": cid, "code": code, "message": message}
                for cid, code, message in self.failures
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [
            f"{'case':<24} {'target':<10} {'compl':>6} {'prec':>6} {'rec':>6} {'f1':>6} {'ans_f1':>6}"
        ]
        for c in self.cases:
            ans = f"{c.answer_f1:.3f}" if c.answer_f1 is not None else "-"
            lines.append(
                f"{c.case_id:<24} {c.target.value:<10} {c.completeness:>6.3f} "
                f"{c.precision:>6.3f} {c.recall:>6.3f} {c.f1:>6.3f} {ans:>6}"
            )
        lines.append("")
        lines.append(
            f"cases={self.case_count} completeness={self.completeness_mean:.3f} "
            f"precision={self.precision_mean:.3f} recall={self.recall_mean:.3f} "
            f"f1={self.f1_mean:.3f}"
            + (f" correlation={self.correlation:.3f}" if self.correlation is not None else "")
        )
        for cid, code, message in self.failures:
            lines.append(f"FAILED {cid}: [{code}] {message}")
        return "\n".join(lines) + "\n"


def completeness(annotated: Set[int], predicted_topk: Sequence[int]) -> float:
    """Fraction of annotated features recovered by the explainer's top-k."""
    if not annotated:
        raise UndefinedMetric("completeness is undefined without annotated features")
    return len(annotated & set(predicted_topk)) / len(annotated)


def prf1(annotated: Set[int], predicted: Set[int]) -> Tuple[float, float, float]:
    if not annotated:
        raise UndefinedMetric("precision/recall are undefined without annotated features")
    overlap = len(annotated & predicted)
    precision = overlap / len(predicted) if predicted else 0.0
    recall = overlap / len(annotated)
    if precision + recall == 0.0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def match_features(
    explanation: Explanation,
    annotated_spans: Sequence[Span],
    k: Optional[int] = None,
    source_text: Optional[str] = None,
) -> Tuple[List[int], List[int]]:
    """Bridge character-span annotations to feature indices.

    A feature counts as annotated when its span overlaps any annotated
    span. Predicted features are the k highest-weight ones (ties to the
    lower index); k defaults to the number of annotated features.
    """
    if source_text is not None and source_text != explanation.source_text:
        raise AnnotationMismatch("annotation source_text differs from explanation source_text")
    annotated = [
        fa.feature.index
        for fa in explanation.features
        if any(
            fa.feature.span[0] < end and start < fa.feature.span[1]
            for start, end in annotated_spans
        )
    ]
    if k is None:
        k = len(annotated)
    predicted = [fa.feature.index for fa in explanation.top_k(k)]
    return annotated, predicted


def answer_correctness(predicted: str, gold: str) -> Tuple[int, float]:
    """Exact match (after normalization) and token F1 against the gold answer."""
    if not gold.strip():
        raise UndefinedMetric("gold answer must be non-empty")
    exact = int(normalize_text(predicted) == normalize_text(gold))
    return exact, token_f1(gold, predicted)


def correlate(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties."""
    if len(xs) != len(ys) or len(xs) < 3:
        raise UndefinedMetric("correlation needs two equal-length lists of at least 3")
    if len(set(xs)) < 2 or len(set(ys)) < 2:
        raise UndefinedMetric("correlation is undefined for zero-variance input")
    rho = stats.spearmanr(xs, ys).statistic
    return float(rho)


def load_annotations(path) -> List[AnnotationRecord]:
    """Parse the annotations JSONL file.

    Schema per line: {"case_id", "target", "source_text",
    "annotated_spans": [[s,e],...], "question"?, "gold_answer"?}.
    """
    records = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestError(f"cannot read annotations {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        try:
            spans = tuple(sorted((int(s), int(e)) for s, e in data["annotated_spans"]))
            records.append(
                AnnotationRecord(
                    case_id=str(data["case_id"]),
                    target=Target(data["target"]),
                    source_text=data["source_text"],
                    annotated_spans=spans,
                    question=data.get("question"),
                    gold_answer=data.get("gold_answer"),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestError(f"{path}:{lineno}: malformed record: {exc}") from exc
    return records


def _explain_record(record, embedder, generator, config, comparators):
    if record.target is Target.RETRIEVAL:
        if not record.question:
            raise AnnotationMismatch(f"{record.case_id}: retrieval case needs a question")
        return explain_retrieval(
            Question(id=record.case_id, text=record.question),
            Document(id=record.case_id, text=record.source_text),
            embedder,
            config,
        )
    prompt = Prompt(
        instruction="",
        context_blocks=(),
        question_text=record.question or "",
        rendered=record.source_text,
        protected_spans=(),
    )
    return explain_generation(prompt, generator, config, comparators=comparators)


def run_eval(
    annotations,
    embedder,
    generator,
    config: Optional[ExplainerConfig] = None,
    comparators: Optional[Dict[str, Comparator]] = None,
) -> EvalReport:
    """Evaluate the explainer against every annotation record.

    Per-record failures are recorded and excluded from aggregates; the run
    continues. Correlation pairs per-case explanation F1 with answer token
    F1 and is reported only when at least 3 gold-answered cases exist.
    """
    if isinstance(annotations, (str, Path)):
        records = load_annotations(annotations)
    else:
        records = list(annotations)
    config = config or ExplainerConfig()

    report = EvalReport()
    pairs: List[Tuple[float, float]] = []
    for record in sorted(records, key=lambda r: r.case_id):
        try:
            explanation = _explain_record(record, embedder, generator, config, comparators)
            annotated, predicted = match_features(
                explanation,
                record.annotated_spans,
                source_text=record.source_text,
            )
            annotated_set = set(annotated)
            compl = completeness(annotated_set, predicted)
            precision, recall, f1 = prf1(annotated_set, set(predicted))
            answer_exact = answer_f1 = None
            if record.gold_answer and explanation.target is Target.GENERATION:
                answer_exact, answer_f1 = answer_correctness(
                    explanation.reference_response or "", record.gold_answer
                )
                pairs.append((f1, answer_f1))
            report.cases.append(
                CaseMetrics(
                    case_id=record.case_id,
                    target=record.target,
                    completeness=compl,
                    precision=precision,
                    recall=recall,
                    f1=f1,
                    answer_exact=answer_exact,
                    answer_f1=answer_f1,
                )
            )
        except RagxError as exc:
            report.failures.append((record.case_id, exc.code, str(exc)))

    report.case_count = len(report.cases)
    if report.cases:
        n = report.case_count
        report.completeness_mean = sum(c.completeness for c in report.cases) / n
        report.precision_mean = sum(c.precision for c in report.cases) / n
        report.recall_mean = sum(c.recall for c in report.cases) / n
        report.f1_mean = sum(c.f1 for c in report.cases) / n
    if len(pairs) >= 3:
        try:
            report.correlation = correlate([a for a, _ in pairs], [b for _, b in pairs])
        except UndefinedMetric:
            report.correlation = None
    return report
