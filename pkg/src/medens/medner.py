"""Lexicon-driven medical entity recognition.

Greedy left-to-right longest match over normalized tokens. The recognizer is
deliberately a dictionary matcher behind a small interface (`extract`-shaped
callables) so a learned model can be swapped in later.

Lexicon TSV: `concept_id<TAB>canonical_name<TAB>surface_form<TAB>semantic_type`,
'#'-prefixed comment lines ignored. A demo lexicon ships in `data/`.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import LexiconFormatError
from .tokenizer import match_key, tokenize

SEMANTIC_TYPES = ("Symptom", "Disorder", "LabTest", "Medication", "Other")


@dataclass(frozen=True)
class LexiconEntry:
    concept_id: str
    canonical_name: str
    surface_form: str
    semantic_type: str


@dataclass(frozen=True)
class ConceptMention:
    concept_id: str
    token_span: tuple[int, int]  # [start, end) token offsets
    surface: str                 # matched raw text


class Lexicon:
    """Immutable after construction; the index maps normalized token tuples
    to the concept id of the first entry that registered that surface."""

    def __init__(self, entries: list[LexiconEntry]):
        self.entries = list(entries)
        self._index: dict[tuple[str, ...], str] = {}
        self.max_len = 0
        for entry in self.entries:
            key = tuple(k for k in (match_key(t.text) for t in tokenize(entry.surface_form)) if k)
            if not key:
                raise ValueError(f"surface form {entry.surface_form!r} is empty after normalization")
            self._index.setdefault(key, entry.concept_id)
            self.max_len = max(self.max_len, len(key))

    def lookup(self, key: tuple[str, ...]) -> str | None:
        return self._index.get(key)

    def __len__(self) -> int:
        return len(self.entries)

    def surface_keys(self) -> list[tuple[str, ...]]:
        return list(self._index)


def load_lexicon(path: str | Path) -> Lexicon:
    return parse_lexicon(Path(path).read_text(encoding="utf-8"))


def parse_lexicon(text: str) -> Lexicon:
    entries: list[LexiconEntry] = []
    seen: set[tuple[str, str]] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.rstrip("\n").split("\t")
        if len(cols) != 4:
            raise LexiconFormatError(line_no, f"expected 4 tab-separated columns, got {len(cols)}")
        concept_id, canonical, surface, sem_type = (c.strip() for c in cols)
        if not concept_id or not surface:
            raise LexiconFormatError(line_no, "empty concept_id or surface_form")
        if sem_type not in SEMANTIC_TYPES:
            raise LexiconFormatError(line_no, f"unknown semantic type {sem_type!r}")
        if (concept_id, surface) in seen:
            raise LexiconFormatError(line_no, f"duplicate (concept_id, surface_form) {(concept_id, surface)}")
        seen.add((concept_id, surface))
        entry = LexiconEntry(concept_id, canonical, surface, sem_type)
        if not any(match_key(t.text) for t in tokenize(surface)):
            raise LexiconFormatError(line_no, f"surface form {surface!r} normalizes to nothing")
        entries.append(entry)
    return Lexicon(entries)


def default_lexicon() -> Lexicon:
    """The bundled ~200-entry demo lexicon."""
    data = resources.files("medens").joinpath("data/demo_lexicon.tsv").read_text(encoding="utf-8")
    return parse_lexicon(data)


def extract(text: str, lexicon: Lexicon) -> list[ConceptMention]:
    """Greedy left-to-right longest-match scan; mentions never overlap.

    Tokens that normalize to nothing (pure-hyphen runs) are transparent to
    matching but spans always address the original token sequence.
    """
    tokens = tokenize(text)
    pairs = [(k, idx) for idx, t in enumerate(tokens) if (k := match_key(t.text))]
    keys = [k for k, _ in pairs]
    orig = [idx for _, idx in pairs]
    mentions: list[ConceptMention] = []
    i = 0
    n = len(keys)
    while i < n:
        matched = None
        for length in range(min(lexicon.max_len, n - i), 0, -1):
            concept = lexicon.lookup(tuple(keys[i:i + length]))
            if concept is not None:
                matched = (concept, length)
                break
        if matched is None:
            i += 1
            continue
        concept, length = matched
        start_tok, end_tok = orig[i], orig[i + length - 1]
        mentions.append(
            ConceptMention(
                concept_id=concept,
                token_span=(start_tok, end_tok + 1),
                surface=text[tokens[start_tok].start:tokens[end_tok].end],
            )
        )
        i += length
    return mentions


def concept_set(mentions: list[ConceptMention]) -> frozenset[str]:
    """Distinct concept ids of the mentions (set semantics)."""
    return frozenset(m.concept_id for m in mentions)


class DictionaryRecognizer:
    """The `extract` operation bound to one lexicon; what the ensemble and
    the metrics take as their recognizer."""

    def __init__(self, lexicon: Lexicon):
        self.lexicon = lexicon

    def extract(self, text: str) -> list[ConceptMention]:
        return extract(text, self.lexicon)

    def concepts(self, text: str) -> frozenset[str]:
        return concept_set(self.extract(text))
