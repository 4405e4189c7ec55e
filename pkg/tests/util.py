"""Builders shared by the test modules."""

from __future__ import annotations

from medens.corpus import (
    DialogueSnippet,
    LabeledExample,
    Provenance,
    Speaker,
    Summary,
    Turn,
)
from medens.medner import ConceptMention


def dr(text: str) -> Turn:
    return Turn(Speaker.DOCTOR, text)


def pt(text: str) -> Turn:
    return Turn(Speaker.PATIENT, text)


def snip(snippet_id: str, *turns: Turn) -> DialogueSnippet:
    return DialogueSnippet(id=snippet_id, turns=tuple(turns))


def human_example(snippet_id: str, question: str, answer: str, summary: str) -> LabeledExample:
    return LabeledExample(
        snippet=snip(snippet_id, dr(question), pt(answer)),
        summary=Summary(summary),
        provenance=Provenance.human(),
    )


def synthetic_example(snippet_id: str, question: str, answer: str, summary: str,
                      k: int = 10, backend_id: str = "mock") -> LabeledExample:
    return LabeledExample(
        snippet=snip(snippet_id, dr(question), pt(answer)),
        summary=Summary(summary),
        provenance=Provenance.synthetic(k, backend_id),
    )


def tiny_universe(count: int) -> list[LabeledExample]:
    """Labeled examples with distinct, reserved-token-free content."""
    return [
        human_example(f"u-{i}", f"Question number {i}?", f"Answer number {i}", f"Summary number {i}.")
        for i in range(count)
    ]


class FixedRecognizer:
    """Maps whole texts to concept sets via a dict; for set-level metric
    properties that do not involve real text scanning."""

    def __init__(self, mapping: dict[str, frozenset[str]]):
        self.mapping = {k: frozenset(v) for k, v in mapping.items()}

    def concepts(self, text: str) -> frozenset[str]:
        return self.mapping.get(text, frozenset())

    def extract(self, text: str) -> list[ConceptMention]:
        return [
            ConceptMention(concept_id=c, token_span=(i, i + 1), surface=c)
            for i, c in enumerate(sorted(self.mapping.get(text, frozenset())))
        ]
