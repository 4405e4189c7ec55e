"""Automated summary metrics: ROUGE-L F1, concept F1, and negation F1, with
per-example and aggregate (macro or micro) reports.

Conventions: an example where neither side yields the quantity being measured
scores a conservative 0, and any undefined precision/recall component is 0.
ROUGE-L is whole-text LCS over lowercased shared-tokenizer tokens, without
stemming.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from .errors import EmptyEvalSet
from .negex import TriggerRule, negated_concepts
from .tokenizer import norm_token, tokenize


class AggregationMode(Enum):
    MACRO = "macro"
    MICRO = "micro"


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


def _prf(precision: float, recall: float) -> PRF:
    if precision + recall == 0:
        return PRF(precision, recall, 0.0)
    return PRF(precision, recall, 2 * precision * recall / (precision + recall))


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class _Counts:
    """Intersection size and the two denominators behind a PRF."""
    hit: int
    ref_total: int  # recall denominator
    hyp_total: int  # precision denominator

    def prf(self) -> PRF:
        return _prf(_ratio(self.hit, self.hyp_total), _ratio(self.hit, self.ref_total))


@dataclass(frozen=True)
class ExampleScores:
    id: str
    rouge_l: PRF
    concept: PRF
    negation: PRF


@dataclass(frozen=True)
class EvalReport:
    per_example: tuple[ExampleScores, ...]
    aggregate: dict
    aggregation_mode: AggregationMode


def rouge_tokens(text: str) -> list[str]:
    return [norm_token(t.text) for t in tokenize(text)]


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length, two-row dynamic program."""
    if not a or not b:
        return 0
    m = len(b)
    prev = [0] * (m + 1)
    curr = [0] * (m + 1)
    for x in a:
        for j in range(1, m + 1):
            if x == b[j - 1]:
                curr[j] = prev[j - 1] + 1
            else:
                up, left = prev[j], curr[j - 1]
                curr[j] = up if up > left else left
        prev, curr = curr, prev
    return prev[m]


def _rouge_counts(reference: str, hypothesis: str) -> _Counts:
    ref = rouge_tokens(reference)
    hyp = rouge_tokens(hypothesis)
    return _Counts(hit=lcs_length(ref, hyp), ref_total=len(ref), hyp_total=len(hyp))


def rouge_l(reference: str, hypothesis: str) -> PRF:
    """R = LCS/|ref|, P = LCS/|hyp|; all zeros when either side is empty."""
    return _rouge_counts(reference, hypothesis).prf()


def _concept_counts(reference: str, hypothesis: str, recognizer) -> _Counts:
    ref = recognizer.concepts(reference)
    hyp = recognizer.concepts(hypothesis)
    return _Counts(hit=len(ref & hyp), ref_total=len(ref), hyp_total=len(hyp))


def concept_prf(reference: str, hypothesis: str, recognizer) -> PRF:
    """Concept-set overlap between reference and hypothesis summaries; both
    sides empty scores the conservative 0."""
    return _concept_counts(reference, hypothesis, recognizer).prf()


def _negation_counts(
    reference: str, hypothesis: str, recognizer, rules: list[TriggerRule]
) -> _Counts:
    ref_mentions = recognizer.extract(reference)
    hyp_mentions = recognizer.extract(hypothesis)
    domain = frozenset(m.concept_id for m in ref_mentions) & frozenset(
        m.concept_id for m in hyp_mentions
    )
    ref_neg = negated_concepts(reference, ref_mentions, rules) & domain
    hyp_neg = negated_concepts(hypothesis, hyp_mentions, rules) & domain
    return _Counts(hit=len(ref_neg & hyp_neg), ref_total=len(ref_neg), hyp_total=len(hyp_neg))


def negation_prf(
    reference: str, hypothesis: str, recognizer, rules: list[TriggerRule]
) -> PRF:
    """Agreement on negated status over concepts present in both summaries."""
    return _negation_counts(reference, hypothesis, recognizer, rules).prf()


@dataclass(frozen=True)
class EvalPair:
    id: str
    reference: str
    hypothesis: str
    snippet_text: str | None = None


def evaluate(
    pairs: Sequence[EvalPair],
    recognizer,
    rules: list[TriggerRule],
    mode: AggregationMode = AggregationMode.MACRO,
    concepts_against: str = "reference",
) -> EvalReport:
    """Score every pair and aggregate.

    Macro averages per-example F1s (with the conservative-zero convention);
    micro recomputes each F1 from summed intersection and denominator counts.
    `concepts_against="snippet"` scores concept/negation coverage against the
    source snippet text instead of the reference summary.
    """
    if not pairs:
        raise EmptyEvalSet()
    if concepts_against not in ("reference", "snippet"):
        raise ValueError("concepts_against must be 'reference' or 'snippet'")

    per_example: list[ExampleScores] = []
    counts: dict[str, list[_Counts]] = {"rouge_l": [], "concept": [], "negation": []}
    for pair in pairs:
        concept_ref = pair.reference
        if concepts_against == "snippet":
            if pair.snippet_text is None:
                raise ValueError(f"pair {pair.id!r} has no snippet text to score against")
            concept_ref = pair.snippet_text
        rc = _rouge_counts(pair.reference, pair.hypothesis)
        cc = _concept_counts(concept_ref, pair.hypothesis, recognizer)
        nc = _negation_counts(concept_ref, pair.hypothesis, recognizer, rules)
        counts["rouge_l"].append(rc)
        counts["concept"].append(cc)
        counts["negation"].append(nc)
        per_example.append(
            ExampleScores(id=pair.id, rouge_l=rc.prf(), concept=cc.prf(), negation=nc.prf())
        )

    def macro(metric: str) -> float:
        values = [getattr(s, metric).f1 for s in per_example]
        return sum(values) / len(values)

    def micro(metric: str) -> float:
        cs = counts[metric]
        merged = _Counts(
            hit=sum(c.hit for c in cs),
            ref_total=sum(c.ref_total for c in cs),
            hyp_total=sum(c.hyp_total for c in cs),
        )
        return merged.prf().f1

    agg = macro if mode is AggregationMode.MACRO else micro
    aggregate = {
        "negation_f1": agg("negation"),
        "concept_f1": agg("concept"),
        "rouge_l_f1": agg("rouge_l"),
    }
    return EvalReport(
        per_example=tuple(per_example), aggregate=aggregate, aggregation_mode=mode
    )


# -- report I/O --

def report_to_json(report: EvalReport) -> dict:
    return {
        "mode": report.aggregation_mode.value,
        "aggregate": report.aggregate,
        "per_example": [
            {
                "id": s.id,
                "rouge_l": {"precision": s.rouge_l.precision, "recall": s.rouge_l.recall, "f1": s.rouge_l.f1},
                "concept": {"precision": s.concept.precision, "recall": s.concept.recall, "f1": s.concept.f1},
                "negation": {"precision": s.negation.precision, "recall": s.negation.recall, "f1": s.negation.f1},
            }
            for s in report.per_example
        ],
    }


def write_report(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report_to_json(report), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def render_table(report: EvalReport, label: str = "summaries") -> str:
    """Plain-text table in the usual Negation F1 / Concept F1 / ROUGE-L F1
    column order, scores scaled to percentages."""
    agg = report.aggregate
    header = f"{'Output':<20} {'Negation F1':>12} {'Concept F1':>12} {'ROUGE-L F1':>12}"
    rule = "-" * len(header)
    row = (
        f"{label:<20} {100 * agg['negation_f1']:>12.2f} "
        f"{100 * agg['concept_f1']:>12.2f} {100 * agg['rouge_l_f1']:>12.2f}"
    )
    mode = f"aggregation: {report.aggregation_mode.value} over {len(report.per_example)} examples"
    return "\n".join([header, rule, row, "", mode])
