"""Shared tokenizer used by the entity recognizer, the negation tagger, and
the ROUGE metric, so token offsets mean the same thing everywhere.

A token is a maximal run of alphanumerics and hyphens. Matching-side
normalization is lowercase, edge hyphens stripped (intra-word hyphens kept),
and a naive plural stem: a trailing 's' is dropped from tokens of 4+ chars.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_TOKEN_RE = re.compile(r"(?:[^\W_]|-)+", re.UNICODE)
_SENTENCE_BREAKS = frozenset(".?!;")


@dataclass(frozen=True)
class Token:
    text: str
    start: int  # char offset, inclusive
    end: int    # char offset, exclusive


def tokenize(text: str) -> list[Token]:
    return [Token(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def norm_token(token: str) -> str:
    """Lowercase and strip edge hyphens ('-Apri.' tokenizes to '-Apri' and
    normalizes to 'apri')."""
    return token.lower().strip("-")


def stem_token(token: str) -> str:
    if len(token) >= 4 and token.endswith("s"):
        return token[:-1]
    return token


def match_key(token: str) -> str:
    """Normalized + stemmed form used for lexicon and trigger matching."""
    return stem_token(norm_token(token))


def match_keys(text: str) -> list[str]:
    return [match_key(t.text) for t in tokenize(text)]


def sentence_indices(text: str, tokens: list[Token]) -> list[int]:
    """Sentence number for each token; sentences split on [.?!;]."""
    breaks = sorted(i for i, ch in enumerate(text) if ch in _SENTENCE_BREAKS)
    out = []
    b = 0
    for tok in tokens:
        while b < len(breaks) and breaks[b] < tok.start:
            b += 1
        out.append(b)
    return out
