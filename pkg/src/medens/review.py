"""Blinded practitioner review service.

Doctors step through items one at a time. In grade mode they bucket each
summary by fact coverage (all / most / some / none); in compare mode they
pick the best of several blinded arms, with "all good" and "none good"
escape hatches. Arms are presented in seeded random order and the arm-to-
model mapping never leaves the server except through the final report.

Persistence is an append-only event log plus a snapshot per session under the
sessions directory; reports are a pure fold over the log. Inline edits are
captured as human-provenance labeled examples in a per-session feedback file.
"""

from __future__ import annotations

import json
import random
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .corpus import (
    DialogueSnippet,
    LabeledExample,
    Provenance,
    Speaker,
    Summary,
    Turn,
    example_to_record,
    read_dataset,
)
from .errors import (
    MedensError,
    MismatchedIds,
    StaleItem,
    TooFewModels,
    UnknownArm,
    UnknownSession,
    WrongMode,
)


class SessionMode(Enum):
    GRADE = "grade"
    COMPARE = "compare"


class GradeBucket(Enum):
    """Fact-coverage buckets: all facts, at least 75%, at least one fact but
    under 75%, none."""

    ALL = "all"
    MOST = "most"
    SOME = "some"
    NONE = "none"


ALL_GOOD = "all_good"
NONE_GOOD = "none_good"


@dataclass(frozen=True)
class Arm:
    arm_id: str
    summary: str


@dataclass(frozen=True)
class ReviewItem:
    item_id: str
    snippet: DialogueSnippet
    arms: tuple[Arm, ...]  # already in presentation order


@dataclass
class Session:
    session_id: str
    mode: SessionMode
    seed: int
    items: list[ReviewItem]
    unblinding: dict[str, str]  # arm_id -> model name; server-side only
    model_names: list[str]
    cursor: int = 0
    # grade-mode progress for the current item: arm_id -> bucket
    pending_grades: dict[str, str] = field(default_factory=dict)


def build_items(
    model_files: list[tuple[str, str | Path]], seed: int
) -> tuple[list[ReviewItem], dict[str, str], list[str]]:
    """Join prediction files by snippet id; per-item arm order is a seeded
    permutation of the models."""
    names = [name for name, _ in model_files]
    if len(set(names)) != len(names):
        raise MismatchedIds("duplicate model names")
    loaded = {}
    ordered_ids: list[str] = []
    for name, path in model_files:
        ds = read_dataset(path)
        loaded[name] = {ex.id: ex for ex in ds.examples}
        if not ordered_ids:
            ordered_ids = [ex.id for ex in ds.examples]
    id_sets = [set(d) for d in loaded.values()]
    if any(s != id_sets[0] for s in id_sets[1:]):
        raise MismatchedIds()
    first_name = names[0]

    rng = random.Random(seed)
    items: list[ReviewItem] = []
    unblinding: dict[str, str] = {}
    for item_id in ordered_ids:
        order = rng.sample(range(len(names)), len(names))
        arms = []
        for position, model_idx in enumerate(order):
            model = names[model_idx]
            arm_id = f"{item_id}#a{position}"
            example = loaded[model][item_id]
            arms.append(Arm(arm_id=arm_id, summary=example.summary.text if example.summary else ""))
            unblinding[arm_id] = model
        items.append(
            ReviewItem(item_id=item_id, snippet=loaded[first_name][item_id].snippet, arms=tuple(arms))
        )
    return items, unblinding, names


def fold_report(session: Session, events: list[dict]) -> dict:
    """Pure fold of the event log into unblinded aggregates; replaying the
    log always reproduces the served report."""
    models = session.model_names
    arm_model = session.unblinding
    if session.mode is SessionMode.GRADE:
        grades: dict[tuple[str, str], str] = {}
        for ev in events:
            payload = ev["payload"]
            if payload["type"] == "grade":
                grades[(ev["item_id"], payload["arm_id"])] = payload["bucket"]
        counts = {m: {b.value: 0 for b in GradeBucket} for m in models}
        totals = {m: 0 for m in models}
        for (item_id, arm_id), bucket in grades.items():
            model = arm_model[arm_id]
            counts[model][bucket] += 1
            totals[model] += 1
        fractions = {
            m: {b: (counts[m][b] / totals[m] if totals[m] else 0.0) for b in counts[m]}
            for m in models
        }
        return {
            "mode": session.mode.value,
            "items": len(session.items),
            "graded_items": totals,
            "bucket_fractions": fractions,
        }
    choices: dict[str, str] = {}
    for ev in events:
        payload = ev["payload"]
        if payload["type"] == "choice":
            choices[ev["item_id"]] = payload["winner"]
    best = {m: 0 for m in models}
    all_good = 0
    none_good = 0
    for item_id, winner in choices.items():
        if winner == ALL_GOOD:
            all_good += 1
            for m in models:
                best[m] += 1
        elif winner == NONE_GOOD:
            none_good += 1
        else:
            best[arm_model[winner]] += 1
    return {
        "mode": session.mode.value,
        "items": len(session.items),
        "choices": len(choices),
        "best_counts": best,
        "all_good": all_good,
        "none_good": none_good,
    }


class SessionStore:
    """Owns session persistence under one directory. Submissions are
    serialized per session; reads work off immutable snapshots."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._store_lock = threading.Lock()

    # -- paths --

    def _snapshot_path(self, sid: str) -> Path:
        return self.root / f"{sid}.session.json"

    def events_path(self, sid: str) -> Path:
        return self.root / f"{sid}.events.jsonl"

    def feedback_path(self, sid: str) -> Path:
        return self.root / f"{sid}.feedback.jsonl"

    # -- session lifecycle --

    def create_session(
        self,
        mode: SessionMode,
        model_files: list[tuple[str, str | Path]],
        seed: int,
        session_id: str | None = None,
    ) -> str:
        if mode is SessionMode.COMPARE and len(model_files) < 2:
            raise TooFewModels(mode.value, len(model_files))
        if not model_files:
            raise TooFewModels(mode.value, 0)
        items, unblinding, names = build_items(model_files, seed)
        sid = session_id or uuid.uuid4().hex[:12]
        session = Session(
            session_id=sid,
            mode=mode,
            seed=seed,
            items=items,
            unblinding=unblinding,
            model_names=names,
        )
        self._save_snapshot(session)
        self.events_path(sid).touch()
        with self._store_lock:
            self._sessions[sid] = session
            self._locks[sid] = threading.Lock()
        return sid

    def _save_snapshot(self, session: Session) -> None:
        obj = {
            "session_id": session.session_id,
            "mode": session.mode.value,
            "seed": session.seed,
            "model_names": session.model_names,
            "unblinding": session.unblinding,
            "items": [
                {
                    "item_id": item.item_id,
                    "snippet": {
                        "id": item.snippet.id,
                        "turns": [
                            {"speaker": t.speaker.value, "text": t.text}
                            for t in item.snippet.turns
                        ],
                    },
                    "arms": [{"arm_id": a.arm_id, "summary": a.summary} for a in item.arms],
                }
                for item in session.items
            ],
        }
        self._snapshot_path(session.session_id).write_text(
            json.dumps(obj, indent=2) + "\n", encoding="utf-8"
        )

    def _load_snapshot(self, sid: str) -> Session:
        path = self._snapshot_path(sid)
        if not path.exists():
            raise UnknownSession(sid)
        obj = json.loads(path.read_text(encoding="utf-8"))
        items = [
            ReviewItem(
                item_id=it["item_id"],
                snippet=DialogueSnippet(
                    id=it["snippet"]["id"],
                    turns=tuple(
                        Turn(Speaker(t["speaker"]), t["text"]) for t in it["snippet"]["turns"]
                    ),
                ),
                arms=tuple(Arm(a["arm_id"], a["summary"]) for a in it["arms"]),
            )
            for it in obj["items"]
        ]
        session = Session(
            session_id=sid,
            mode=SessionMode(obj["mode"]),
            seed=obj["seed"],
            items=items,
            unblinding=obj["unblinding"],
            model_names=obj["model_names"],
        )
        self._replay_cursor(session)
        return session

    def _replay_cursor(self, session: Session) -> None:
        """Recover cursor and pending grades from the event log."""
        session.cursor = 0
        session.pending_grades = {}
        for ev in self.read_events(session.session_id):
            if session.cursor >= len(session.items):
                break
            item = session.items[session.cursor]
            if ev["item_id"] != item.item_id:
                continue
            payload = ev["payload"]
            if payload["type"] == "choice":
                session.cursor += 1
            elif payload["type"] == "grade":
                session.pending_grades[payload["arm_id"]] = payload["bucket"]
                if len(session.pending_grades) == len(item.arms):
                    session.cursor += 1
                    session.pending_grades = {}

    def get(self, sid: str) -> Session:
        with self._store_lock:
            if sid in self._sessions:
                return self._sessions[sid]
        session = self._load_snapshot(sid)
        with self._store_lock:
            self._sessions.setdefault(sid, session)
            self._locks.setdefault(sid, threading.Lock())
            return self._sessions[sid]

    def _lock(self, sid: str) -> threading.Lock:
        with self._store_lock:
            if sid not in self._locks:
                raise UnknownSession(sid)
            return self._locks[sid]

    # -- events --

    def read_events(self, sid: str) -> list[dict]:
        path = self.events_path(sid)
        if not path.exists():
            raise UnknownSession(sid)
        events = []
        with path.open("r", encoding="utf-8") as handle:
            for line in handle:
                if line.strip():
                    events.append(json.loads(line))
        return events

    def _append_event(self, sid: str, item_id: str, payload: dict) -> None:
        event = {
            "timestamp": time.time(),
            "session_id": sid,
            "item_id": item_id,
            "payload": payload,
        }
        with self.events_path(sid).open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(event, ensure_ascii=False) + "\n")

    # -- operations --

    def next_item(self, sid: str) -> ReviewItem | None:
        session = self.get(sid)
        if session.cursor >= len(session.items):
            return None
        return session.items[session.cursor]

    def submit(self, sid: str, item_id: str, payload: dict) -> int:
        session = self.get(sid)
        with self._lock(sid):
            if session.cursor >= len(session.items):
                raise StaleItem(item_id, None)
            item = session.items[session.cursor]
            if item.item_id != item_id:
                raise StaleItem(item_id, item.item_id)
            arm_ids = {a.arm_id for a in item.arms}
            etype = payload.get("type")
            if etype == "grade":
                if session.mode is not SessionMode.GRADE:
                    raise WrongMode("grade", session.mode.value)
                if payload.get("arm_id") not in arm_ids:
                    raise UnknownArm(str(payload.get("arm_id")))
                GradeBucket(payload.get("bucket"))  # validates
                self._append_event(sid, item_id, payload)
                session.pending_grades[payload["arm_id"]] = payload["bucket"]
                if len(session.pending_grades) == len(item.arms):
                    session.cursor += 1
                    session.pending_grades = {}
            elif etype == "choice":
                if session.mode is not SessionMode.COMPARE:
                    raise WrongMode("choice", session.mode.value)
                winner = payload.get("winner")
                if winner not in (ALL_GOOD, NONE_GOOD) and winner not in arm_ids:
                    raise UnknownArm(str(winner))
                self._append_event(sid, item_id, payload)
                session.cursor += 1
                session.pending_grades = {}
            elif etype == "edit":
                if payload.get("arm_id") not in arm_ids:
                    raise UnknownArm(str(payload.get("arm_id")))
                if not isinstance(payload.get("edited_text"), str):
                    raise ValueError("edit events need edited_text")
                self._append_event(sid, item_id, payload)
                self._append_feedback(sid, item, payload["edited_text"])
            else:
                raise ValueError(f"unknown event type {etype!r}")
            return session.cursor

    def _append_feedback(self, sid: str, item: ReviewItem, edited_text: str) -> None:
        example = LabeledExample(
            snippet=item.snippet,
            summary=Summary(edited_text),
            provenance=Provenance.human(),
        )
        with self.feedback_path(sid).open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(example_to_record(example), ensure_ascii=False) + "\n")

    def report(self, sid: str) -> dict:
        session = self.get(sid)
        return fold_report(session, self.read_events(sid))


# -- HTTP layer --

class ModelFile(BaseModel):
    name: str
    path: str


class CreateSessionBody(BaseModel):
    mode: str
    models: list[ModelFile]
    seed: int = 0


class EventBody(BaseModel):
    type: str
    arm_id: str | None = None
    bucket: str | None = None
    winner: str | None = None
    edited_text: str | None = None


def _item_payload(item: ReviewItem) -> dict:
    return {
        "item_id": item.item_id,
        "snippet": {
            "id": item.snippet.id,
            "turns": [{"speaker": t.speaker.value, "text": t.text} for t in item.snippet.turns],
        },
        "arms": [{"arm_id": a.arm_id, "summary": a.summary} for a in item.arms],
    }


def create_app(store: SessionStore, ui_dist: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="medens review service")

    @app.exception_handler(MedensError)
    async def _domain_error(request: Request, exc: MedensError):
        status = 404 if isinstance(exc, UnknownSession) else 400
        return JSONResponse(
            status_code=status,
            content={"error": {"code": type(exc).__name__, "message": str(exc)}},
        )

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "ValidationError", "message": str(exc)}},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        mode = SessionMode(body.mode)
        sid = store.create_session(
            mode, [(m.name, m.path) for m in body.models], seed=body.seed
        )
        return {"session_id": sid, "mode": mode.value}

    @app.get("/sessions/{sid}/next")
    def next_item(sid: str):
        item = store.next_item(sid)
        if item is None:
            session = store.get(sid)
            return {"done": True, "items": len(session.items), "mode": session.mode.value}
        session = store.get(sid)
        return {
            "done": False,
            "mode": session.mode.value,
            "cursor": session.cursor,
            "items": len(session.items),
            "item": _item_payload(item),
        }

    @app.post("/sessions/{sid}/items/{item_id}/events")
    def submit(sid: str, item_id: str, body: EventBody):
        payload = {k: v for k, v in body.model_dump().items() if v is not None}
        cursor = store.submit(sid, item_id, payload)
        return {"ok": True, "cursor": cursor}

    @app.get("/sessions/{sid}/report")
    def report(sid: str):
        return store.report(sid)

    if ui_dist is not None and Path(ui_dist).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dist), html=True), name="ui")

    return app
