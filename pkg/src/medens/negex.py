"""Rule-based negation tagging of concept mentions (NegEx-style).

Sentences split on [.?!;]. Within a sentence a pre-negation trigger negates
mentions starting in the next W=5 tokens, cut short at a termination trigger
or the sentence end; a post-negation trigger negates mentions ending in the
previous W=5 tokens; pseudo-negation matches suppress overlapping
pre-negation triggers. Everything untouched is affirmed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import TriggerFormatError
from .medner import ConceptMention
from .tokenizer import match_key, sentence_indices, tokenize

SCOPE_WINDOW = 5  # tokens; the classic NegEx default


class TriggerKind(Enum):
    PRE_NEGATION = "pre"
    POST_NEGATION = "post"
    PSEUDO_NEGATION = "pseudo"
    TERMINATION = "term"


class NegationStatus(Enum):
    AFFIRMED = "affirmed"
    NEGATED = "negated"


@dataclass(frozen=True)
class TriggerRule:
    phrase: str
    kind: TriggerKind

    def keys(self) -> tuple[str, ...]:
        return tuple(k for k in (match_key(t.text) for t in tokenize(self.phrase)) if k)


@dataclass(frozen=True)
class NegationTag:
    mention: ConceptMention
    status: NegationStatus


def parse_triggers(text: str) -> list[TriggerRule]:
    rules: list[TriggerRule] = []
    seen: set[tuple[tuple[str, ...], TriggerKind]] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.rstrip("\n").split("\t")
        if len(cols) != 2:
            raise TriggerFormatError(line_no, f"expected 2 tab-separated columns, got {len(cols)}")
        phrase, kind_name = cols[0].strip(), cols[1].strip()
        try:
            kind = TriggerKind(kind_name)
        except ValueError:
            raise TriggerFormatError(line_no, f"unknown kind {kind_name!r}") from None
        rule = TriggerRule(phrase, kind)
        key = (rule.keys(), kind)
        if not key[0]:
            raise TriggerFormatError(line_no, f"phrase {phrase!r} normalizes to nothing")
        if key in seen:
            raise TriggerFormatError(line_no, f"duplicate trigger {phrase!r} ({kind_name})")
        seen.add(key)
        rules.append(rule)
    return rules


def load_triggers(path: str | Path | None = None) -> list[TriggerRule]:
    """Rules from a TSV file; with no path, the bundled defaults."""
    if path is None:
        text = resources.files("medens").joinpath("data/negex_triggers.tsv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_triggers(text)


def _find_matches(
    keys: list[str], sentences: list[int], phrase: tuple[str, ...]
) -> list[tuple[int, int]]:
    """All [start, end) filtered-token spans where the phrase occurs inside a
    single sentence."""
    n, m = len(keys), len(phrase)
    out = []
    for i in range(n - m + 1):
        if keys[i:i + m] == list(phrase) and sentences[i] == sentences[i + m - 1]:
            out.append((i, i + m))
    return out


def tag_negations(
    text: str,
    mentions: list[ConceptMention],
    rules: list[TriggerRule],
    window: int = SCOPE_WINDOW,
) -> list[NegationTag]:
    """One tag per input mention, same order; mentions must come from the
    shared tokenizer over this text."""
    tokens = tokenize(text)
    sentence_of = sentence_indices(text, tokens)
    # Mirror the recognizer: tokens normalizing to nothing are transparent.
    pairs = [(k, idx) for idx, t in enumerate(tokens) if (k := match_key(t.text))]
    keys = [k for k, _ in pairs]
    orig = [idx for _, idx in pairs]
    filt_sentences = [sentence_of[idx] for idx in orig]
    # Map original token index -> filtered index of the next filtered token.
    filt_of_orig: dict[int, int] = {idx: fi for fi, idx in enumerate(orig)}

    matches: dict[TriggerKind, list[tuple[int, int]]] = {kind: [] for kind in TriggerKind}
    for rule in rules:
        for span in _find_matches(keys, filt_sentences, rule.keys()):
            matches[rule.kind].append(span)

    def overlaps(a: tuple[int, int], b: tuple[int, int]) -> bool:
        return a[0] < b[1] and b[0] < a[1]

    pre = [
        span for span in matches[TriggerKind.PRE_NEGATION]
        if not any(overlaps(span, p) for p in matches[TriggerKind.PSEUDO_NEGATION])
    ]
    post = matches[TriggerKind.POST_NEGATION]
    term = matches[TriggerKind.TERMINATION]

    def sentence_bounds(fi: int) -> tuple[int, int]:
        s = filt_sentences[fi]
        lo = fi
        while lo > 0 and filt_sentences[lo - 1] == s:
            lo -= 1
        hi = fi
        while hi + 1 < len(keys) and filt_sentences[hi + 1] == s:
            hi += 1
        return lo, hi + 1  # [lo, hi) exclusive end

    # Mention positions in filtered coordinates. A mention's tokens all carry
    # a non-empty key (they matched lexicon surfaces), so the lookup holds.
    def filt_span(m: ConceptMention) -> tuple[int, int] | None:
        start, end = m.token_span
        fs = filt_of_orig.get(start)
        fe = filt_of_orig.get(end - 1)
        if fs is None or fe is None:
            return None
        return fs, fe + 1

    negated: set[int] = set()
    spans = [filt_span(m) for m in mentions]

    for t_start, t_end in pre:
        _, sent_end = sentence_bounds(t_start)
        scope_end = min(t_end + window, sent_end)
        for tm in term:
            if t_end <= tm[0] < scope_end:
                scope_end = tm[0]
        for mi, span in enumerate(spans):
            if span is not None and t_end <= span[0] < scope_end:
                negated.add(mi)

    for t_start, t_end in post:
        sent_start, _ = sentence_bounds(t_start)
        scope_start = max(t_start - window, sent_start)
        for mi, span in enumerate(spans):
            if span is not None and scope_start <= span[1] - 1 < t_start:
                negated.add(mi)

    return [
        NegationTag(m, NegationStatus.NEGATED if mi in negated else NegationStatus.AFFIRMED)
        for mi, m in enumerate(mentions)
    ]


def negated_concepts(
    text: str, mentions: list[ConceptMention], rules: list[TriggerRule]
) -> frozenset[str]:
    """Concept ids with at least one negated mention in the text."""
    return frozenset(
        tag.mention.concept_id
        for tag in tag_negations(text, mentions, rules)
        if tag.status is NegationStatus.NEGATED
    )
