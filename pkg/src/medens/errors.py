"""Exception types shared across the package.

Plain I/O failures use the builtin OSError family; everything defined here is
a domain error with enough structure attached for callers to act on it.
"""

from __future__ import annotations


class MedensError(Exception):
    """Base class for all domain errors raised by this package."""


# -- corpus --

class MalformedTranscript(MedensError):
    def __init__(self, line_no: int, line: str):
        self.line_no = line_no
        self.line = line
        super().__init__(f"line {line_no}: expected 'DR:' or 'PT:' prefix: {line!r}")


class SchemaError(MedensError):
    def __init__(self, line_no: int, field: str, detail: str = ""):
        self.line_no = line_no
        self.field = field
        msg = f"line {line_no}: bad or missing field {field!r}"
        super().__init__(msg + (f" ({detail})" if detail else ""))


class DuplicateId(MedensError):
    def __init__(self, snippet_id: str):
        self.snippet_id = snippet_id
        super().__init__(f"duplicate snippet id {snippet_id!r}")


# -- medner / negex --

class LexiconFormatError(MedensError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        super().__init__(f"lexicon line {line_no}: {detail or 'bad row'}")


class TriggerFormatError(MedensError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        super().__init__(f"trigger line {line_no}: {detail or 'bad row'}")


# -- prompt --

class ReservedTokenInText(MedensError):
    def __init__(self, token: str, where: str = "turn text"):
        self.token = token
        super().__init__(f"reserved token {token!r} present in {where}")


class TooManyExamples(MedensError):
    def __init__(self, count: int, limit: int):
        self.count = count
        self.limit = limit
        super().__init__(f"{count} priming examples exceed the maximum of {limit}")


class EmptyExamples(MedensError):
    def __init__(self):
        super().__init__("at least one priming example is required")


# -- llmclient --

class BackendError(MedensError):
    """Base for completion-backend failures; `attempts` is set by the retry
    wrapper when it gives up."""

    attempts: int | None = None
    trial_index: int | None = None


class Timeout(BackendError):
    def __init__(self, after: float):
        self.after = after
        super().__init__(f"completion request timed out after {after:g}s")


class RateLimited(BackendError):
    def __init__(self, retry_after: float | None = None):
        self.retry_after = retry_after
        suffix = f", retry after {retry_after:g}s" if retry_after is not None else ""
        super().__init__(f"rate limited by backend{suffix}")


class HttpError(BackendError):
    def __init__(self, status: int, body_excerpt: str = ""):
        self.status = status
        self.body_excerpt = body_excerpt[:200]
        super().__init__(f"backend returned HTTP {status}: {self.body_excerpt[:80]}")


class ProtocolError(BackendError):
    def __init__(self, detail: str):
        super().__init__(f"malformed completion response: {detail}")


# -- ensemble / datagen --

class UniverseTooSmall(MedensError):
    def __init__(self, need: int, have: int):
        self.need = need
        self.have = have
        super().__init__(f"need {need} labeled examples, have {have}")


class TestTooLarge(MedensError):
    __test__ = False  # keep pytest from collecting this as a test class

    def __init__(self, test_size: int, dataset_size: int):
        self.test_size = test_size
        self.dataset_size = dataset_size
        super().__init__(f"test size {test_size} must be smaller than dataset size {dataset_size}")


class NotEnoughSynthetic(MedensError):
    def __init__(self, need: int, have: int):
        self.need = need
        self.have = have
        super().__init__(f"mix needs {need} synthetic examples, have {have}")


class ResumeMismatch(MedensError):
    def __init__(self, detail: str):
        super().__init__(f"checkpoint does not match this generation job: {detail}")


# -- metrics --

class EmptyEvalSet(MedensError):
    def __init__(self):
        super().__init__("no (reference, hypothesis) pairs to evaluate")


# -- review service --

class MismatchedIds(MedensError):
    def __init__(self, detail: str = ""):
        super().__init__(f"prediction files do not cover the same snippet ids{': ' + detail if detail else ''}")


class TooFewModels(MedensError):
    def __init__(self, mode: str, count: int):
        super().__init__(f"{mode} sessions need at least 2 models, got {count}")


class UnknownSession(MedensError):
    def __init__(self, session_id: str):
        self.session_id = session_id
        super().__init__(f"unknown session {session_id!r}")


class WrongMode(MedensError):
    def __init__(self, event_type: str, mode: str):
        super().__init__(f"{event_type!r} events are not allowed in {mode} mode")


class StaleItem(MedensError):
    def __init__(self, item_id: str, current: str | None):
        super().__init__(f"item {item_id!r} is not the current item ({current!r})")


class UnknownArm(MedensError):
    def __init__(self, arm_id: str):
        self.arm_id = arm_id
        super().__init__(f"unknown arm {arm_id!r}")
