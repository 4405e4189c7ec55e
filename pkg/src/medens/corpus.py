"""Domain types for dialogues, summaries, and datasets, plus transcript
parsing, snippet splitting, and line-oriented dataset I/O.

The on-disk record format is one JSON object per line:

    {"id": str,
     "turns": [{"speaker": "DR"|"PT", "text": str}],
     "summary": str|null,
     "provenance": {"kind": "human"|"synthetic", "k": int?, "backend_id": str?}}

with a sidecar manifest at `<stem>.manifest.json`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

from .errors import DuplicateId, MalformedTranscript, SchemaError

# Reserved by the prompt wire format; summaries must never contain them.
RESERVED_TOKENS = ("[SEP]", "[SUMMARIZED]", "[STOP]")

_TURN_LINE_RE = re.compile(r"^\s*(DR|PT)\s*:\s*(.*?)\s*$", re.IGNORECASE)


class Speaker(Enum):
    DOCTOR = "DR"
    PATIENT = "PT"


@dataclass(frozen=True)
class Turn:
    speaker: Speaker
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("turn text must be non-empty")


@dataclass(frozen=True)
class DialogueSnippet:
    id: str
    turns: tuple[Turn, ...]

    def __post_init__(self):
        if not self.turns:
            raise ValueError(f"snippet {self.id!r} has no turns")


@dataclass(frozen=True)
class Summary:
    """Free-text summary; empty only as a degenerate model output."""

    text: str


@dataclass(frozen=True)
class Provenance:
    kind: str  # "human" | "synthetic"
    k: int | None = None
    backend_id: str | None = None

    HUMAN = "human"
    SYNTHETIC = "synthetic"

    def __post_init__(self):
        if self.kind not in (self.HUMAN, self.SYNTHETIC):
            raise ValueError(f"bad provenance kind {self.kind!r}")
        if self.kind == self.SYNTHETIC and (self.k is None or self.k < 1):
            raise ValueError("synthetic provenance needs k >= 1")

    @classmethod
    def human(cls) -> "Provenance":
        return cls(cls.HUMAN)

    @classmethod
    def synthetic(cls, k: int, backend_id: str) -> "Provenance":
        return cls(cls.SYNTHETIC, k=k, backend_id=backend_id)


@dataclass(frozen=True)
class LabeledExample:
    snippet: DialogueSnippet
    summary: Summary | None
    provenance: Provenance

    @property
    def id(self) -> str:
        return self.snippet.id


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    size: int
    provenance_counts: tuple[tuple[str, int], ...]  # (("human", n), ("synthetic", m))
    seed: int
    parents: tuple[str, ...] = ()
    alpha: float | None = None  # mixing ratio, set by datagen.mix only

    def counts(self) -> dict[str, int]:
        return dict(self.provenance_counts)


@dataclass
class Dataset:
    name: str
    examples: list[LabeledExample]
    manifest: DatasetManifest

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Dataset)
            and self.name == other.name
            and self.examples == other.examples
            and self.manifest == other.manifest
        )

    @classmethod
    def build(
        cls,
        name: str,
        examples: Iterable[LabeledExample],
        seed: int = 0,
        parents: Iterable[str] = (),
        alpha: float | None = None,
    ) -> "Dataset":
        examples = list(examples)
        counts = {Provenance.HUMAN: 0, Provenance.SYNTHETIC: 0}
        for ex in examples:
            counts[ex.provenance.kind] += 1
        manifest = DatasetManifest(
            name=name,
            size=len(examples),
            provenance_counts=tuple(sorted(counts.items())),
            seed=seed,
            parents=tuple(parents),
            alpha=alpha,
        )
        return cls(name=name, examples=examples, manifest=manifest)

    def ids(self) -> list[str]:
        return [ex.id for ex in self.examples]


# -- transcript parsing --

def parse_transcript(raw: str) -> list[Turn]:
    """One Turn per non-blank 'DR:'/'PT:' line, prefix stripped, text trimmed.

    Raises MalformedTranscript when a non-blank line lacks a recognized prefix
    or carries no utterance text.
    """
    turns: list[Turn] = []
    for line_no, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        m = _TURN_LINE_RE.match(line)
        if m is None or not m.group(2):
            raise MalformedTranscript(line_no, line)
        speaker = Speaker.DOCTOR if m.group(1).upper() == "DR" else Speaker.PATIENT
        turns.append(Turn(speaker, m.group(2)))
    return turns


def format_transcript(turns: Iterable[Turn]) -> str:
    """Inverse of parse_transcript for well-formed turns."""
    return "\n".join(f"{t.speaker.value}: {t.text}" for t in turns)


def _is_physician_question(turn: Turn) -> bool:
    return turn.speaker is Speaker.DOCTOR and "?" in turn.text


def split_into_snippets(turns: list[Turn], source: str = "snippet") -> list[DialogueSnippet]:
    """Cut a dialogue at physician questions.

    Each snippet starts at a doctor turn containing '?' and runs up to the
    next such turn. Turns before the first physician question form a leading
    snippet only if a patient spoke in them; otherwise they are dropped.
    """
    starts = [i for i, t in enumerate(turns) if _is_physician_question(t)]
    groups: list[list[Turn]] = []
    first = starts[0] if starts else len(turns)
    leading = turns[:first]
    if leading and any(t.speaker is Speaker.PATIENT for t in leading):
        groups.append(leading)
    for n, start in enumerate(starts):
        end = starts[n + 1] if n + 1 < len(starts) else len(turns)
        groups.append(turns[start:end])
    return [
        DialogueSnippet(id=f"{source}-{i}", turns=tuple(group))
        for i, group in enumerate(groups)
    ]


# -- record (de)serialization --

def example_to_record(ex: LabeledExample) -> dict:
    prov: dict = {"kind": ex.provenance.kind}
    if ex.provenance.kind == Provenance.SYNTHETIC:
        prov["k"] = ex.provenance.k
        prov["backend_id"] = ex.provenance.backend_id
    return {
        "id": ex.snippet.id,
        "turns": [{"speaker": t.speaker.value, "text": t.text} for t in ex.snippet.turns],
        "summary": ex.summary.text if ex.summary is not None else None,
        "provenance": prov,
    }


def record_to_example(obj: dict, line_no: int = 0) -> LabeledExample:
    def need(field_name: str, parent: dict, container: str = "record"):
        if field_name not in parent:
            raise SchemaError(line_no, field_name, f"missing from {container}")
        return parent[field_name]

    snippet_id = need("id", obj)
    if not isinstance(snippet_id, str) or not snippet_id:
        raise SchemaError(line_no, "id", "must be a non-empty string")
    raw_turns = need("turns", obj)
    if not isinstance(raw_turns, list) or not raw_turns:
        raise SchemaError(line_no, "turns", "must be a non-empty list")
    turns = []
    for t in raw_turns:
        speaker = need("speaker", t, "turn")
        text = need("text", t, "turn")
        if speaker not in ("DR", "PT"):
            raise SchemaError(line_no, "speaker", f"got {speaker!r}")
        if not isinstance(text, str) or not text.strip():
            raise SchemaError(line_no, "text", "must be a non-empty string")
        turns.append(Turn(Speaker(speaker), text))
    summary_text = need("summary", obj)
    if summary_text is not None and not isinstance(summary_text, str):
        raise SchemaError(line_no, "summary", "must be a string or null")
    raw_prov = need("provenance", obj)
    kind = need("kind", raw_prov, "provenance")
    try:
        if kind == Provenance.SYNTHETIC:
            prov = Provenance.synthetic(
                need("k", raw_prov, "provenance"),
                need("backend_id", raw_prov, "provenance"),
            )
        else:
            prov = Provenance(kind)
    except (ValueError, TypeError) as exc:
        raise SchemaError(line_no, "provenance", str(exc)) from exc
    return LabeledExample(
        snippet=DialogueSnippet(snippet_id, tuple(turns)),
        summary=Summary(summary_text) if summary_text is not None else None,
        provenance=prov,
    )


def _manifest_path(path: Path) -> Path:
    return path.with_name(path.stem + ".manifest.json")


def _manifest_to_json(m: DatasetManifest) -> dict:
    obj = {
        "name": m.name,
        "size": m.size,
        "provenance_counts": m.counts(),
        "seed": m.seed,
        "parents": list(m.parents),
    }
    if m.alpha is not None:
        obj["alpha"] = m.alpha
    return obj


def _manifest_from_json(obj: dict) -> DatasetManifest:
    return DatasetManifest(
        name=obj["name"],
        size=obj["size"],
        provenance_counts=tuple(sorted(obj["provenance_counts"].items())),
        seed=obj["seed"],
        parents=tuple(obj.get("parents", [])),
        alpha=obj.get("alpha"),
    )


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write records one per line plus the sidecar manifest.

    Refuses datasets with duplicate snippet ids (DuplicateId).
    """
    path = Path(path)
    seen: set[str] = set()
    for ex in dataset.examples:
        if ex.id in seen:
            raise DuplicateId(ex.id)
        seen.add(ex.id)
    lines = [
        json.dumps(example_to_record(ex), ensure_ascii=False)
        for ex in dataset.examples
    ]
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    _manifest_path(path).write_text(
        json.dumps(_manifest_to_json(dataset.manifest), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def read_dataset(path: str | Path) -> Dataset:
    """Read a dataset and its sidecar manifest; read(write(d)) == d.

    When the sidecar is absent the manifest is reconstructed from the records
    (seed 0, no parents).
    """
    path = Path(path)
    examples: list[LabeledExample] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(line_no, "<record>", f"invalid JSON: {exc}") from exc
            ex = record_to_example(obj, line_no)
            if ex.id in seen:
                raise DuplicateId(ex.id)
            seen.add(ex.id)
            examples.append(ex)
    mpath = _manifest_path(path)
    if mpath.exists():
        manifest = _manifest_from_json(json.loads(mpath.read_text(encoding="utf-8")))
        name = manifest.name
        if manifest.size != len(examples):
            raise SchemaError(0, "size", f"manifest says {manifest.size}, file has {len(examples)}")
        return Dataset(name=name, examples=examples, manifest=manifest)
    return Dataset.build(path.stem, examples)


def read_snippets(path: str | Path) -> list[DialogueSnippet]:
    """Snippet view of a dataset file; summaries and provenance are ignored."""
    return [ex.snippet for ex in read_dataset(path).examples]
