from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from medens.errors import LexiconFormatError
from medens.medner import (
    ConceptMention,
    Lexicon,
    concept_set,
    extract,
    parse_lexicon,
)
from medens.tokenizer import match_key, tokenize


def lex(*rows: tuple[str, str]) -> Lexicon:
    text = "\n".join(f"{cid}\t{surface}\t{surface}\tSymptom" for cid, surface in rows)
    return parse_lexicon(text)


class TestLoadLexicon:
    def test_direct_load_row(self):
        lexicon = parse_lexicon("C0011991\tdiarrhea\tdiarrhoea\tSymptom")
        assert [m.concept_id for m in extract("she has diarrhoea", lexicon)] == ["C0011991"]

    def test_empty_file_extracts_nothing_everywhere(self):
        lexicon = parse_lexicon("")
        assert extract("fever cough pain", lexicon) == []

    def test_three_columns_rejected(self):
        with pytest.raises(LexiconFormatError) as err:
            parse_lexicon("C1\tfever\tfever")
        assert err.value.line_no == 1

    def test_unknown_semantic_type_rejected(self):
        with pytest.raises(LexiconFormatError):
            parse_lexicon("C1\tfever\tfever\tVirus")

    def test_comment_and_blank_lines_ignored(self):
        lexicon = parse_lexicon("# header\n\nC1\tfever\tfever\tSymptom\n")
        assert len(lexicon) == 1

    def test_duplicate_pair_rejected(self):
        text = "C1\tfever\tfever\tSymptom\nC1\tfever\tfever\tSymptom"
        with pytest.raises(LexiconFormatError):
            parse_lexicon(text)


class TestExtract:
    def test_birth_control_apri(self):
        lexicon = lex(("C:BC", "birth control"), ("C:APRI", "apri"))
        text = "My only regular medication is birth control -Apri. Low dosage."
        mentions = extract(text, lexicon)
        assert [m.concept_id for m in mentions] == ["C:BC", "C:APRI"]
        assert mentions[1].surface == "-Apri"

    def test_no_medical_words(self):
        lexicon = lex(("C1", "fever"))
        assert extract("hello there", lexicon) == []

    def test_longest_match_wins(self):
        lexicon = lex(("C1", "chest pain"), ("C2", "pain"))
        assert [m.concept_id for m in extract("chest pain", lexicon)] == ["C1"]

    def test_plural_stemming_both_sides(self):
        lexicon = lex(("C1", "headaches"))
        assert [m.concept_id for m in extract("a headache again", lexicon)] == ["C1"]

    def test_spans_sorted_and_non_overlapping(self, lexicon):
        text = "fever and chest pain with cough, no nausea; still has chest pain"
        mentions = extract(text, lexicon)
        spans = [m.token_span for m in mentions]
        assert spans == sorted(spans)
        for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
            assert e1 <= s2

    def test_surface_re_normalizes_to_lexicon_form(self, lexicon):
        text = "Fever, and -- CHEST PAIN."
        for mention in extract(text, lexicon):
            keys = tuple(
                k for t in tokenize(mention.surface) if (k := match_key(t.text))
            )
            assert lexicon.lookup(keys) == mention.concept_id


def brute_force_extract(text: str, surfaces: dict[str, str]) -> list[str]:
    """Independent oracle: try every (start, surface) pair, then replay the
    greedy longest-match left to right."""
    tokens = tokenize(text)
    keyed = [(match_key(t.text), i) for i, t in enumerate(tokens)]
    keyed = [(k, i) for k, i in keyed if k]
    keys = [k for k, _ in keyed]
    candidates = {}  # start -> list[(length, concept)] in lexicon order
    for surface, concept in surfaces.items():
        skeys = [k for t in tokenize(surface) if (k := match_key(t.text))]
        for start in range(len(keys) - len(skeys) + 1):
            if keys[start:start + len(skeys)] == skeys:
                candidates.setdefault(start, []).append((len(skeys), concept))
    out = []
    i = 0
    while i < len(keys):
        options = candidates.get(i, [])
        if not options:
            i += 1
            continue
        best_len = max(length for length, _ in options)
        concept = next(c for length, c in options if length == best_len)
        out.append(concept)
        i += best_len
    return out


word = st.sampled_from(["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta"])


@settings(max_examples=200, deadline=None)
@given(
    surfaces=st.lists(st.lists(word, min_size=1, max_size=3), min_size=1, max_size=8),
    text_words=st.lists(word, min_size=0, max_size=15),
)
def test_extract_matches_brute_force_oracle(surfaces, text_words):
    rows = []
    mapping = {}
    for i, toks in enumerate(surfaces):
        surface = " ".join(toks)
        if surface in mapping:
            continue
        mapping[surface] = f"C{i}"
        rows.append((f"C{i}", surface))
    lexicon = lex(*rows)
    text = " ".join(text_words)
    got = [m.concept_id for m in extract(text, lexicon)]
    assert got == brute_force_extract(text, mapping)


@settings(max_examples=100, deadline=None)
@given(text_words=st.lists(word, min_size=0, max_size=12))
def test_union_lexicon_superset(text_words):
    text = " ".join(text_words)
    l1 = lex(("C1", "alpha"), ("C2", "beta gamma"))
    l2_rows = [("C1", "alpha"), ("C2", "beta gamma"), ("C3", "zeta")]
    l12 = lex(*l2_rows)
    ids_small = concept_set(extract(text, l1))
    ids_big = concept_set(extract(text, l12))
    assert ids_small <= ids_big


class TestConceptSet:
    def test_dedup(self):
        mentions = [
            ConceptMention("C1", (0, 1), "a"),
            ConceptMention("C1", (2, 3), "a"),
            ConceptMention("C2", (4, 5), "b"),
        ]
        assert concept_set(mentions) == {"C1", "C2"}

    def test_empty(self):
        assert concept_set([]) == frozenset()

    def test_from_extract(self):
        lexicon = lex(("C:BC", "birth control"), ("C:APRI", "apri"))
        mentions = extract("On birth control, specifically Apri.", lexicon)
        assert concept_set(mentions) == {"C:BC", "C:APRI"}


def test_longest_match_dominance(lexicon):
    # No mention is a strict sub-span of another possible match at the same start.
    text = "severe chest pain and high blood pressure today"
    mentions = extract(text, lexicon)
    keys = [match_key(t.text) for t in tokenize(text)]
    for m in mentions:
        start, end = m.token_span
        for longer_end in range(end + 1, len(keys) + 1):
            assert lexicon.lookup(tuple(keys[start:longer_end])) is None
