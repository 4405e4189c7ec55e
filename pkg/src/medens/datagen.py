"""Dataset lifecycle: train/test splitting, priming-universe selection,
synthetic-corpus generation at scale (with checkpoint/resume), and mixing
human with synthetic data at a given ratio.

Also ships a small seeded template generator for demo dialogues so the whole
pipeline can run offline.
"""

from __future__ import annotations

import json
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

from .corpus import (
    Dataset,
    DialogueSnippet,
    LabeledExample,
    Provenance,
    Speaker,
    Summary,
    Turn,
    example_to_record,
    record_to_example,
)
from .ensemble import EnsembleConfig, sample_priming_sets, summarize_ens
from .errors import NotEnoughSynthetic, ResumeMismatch, TestTooLarge, UniverseTooSmall
from .llmclient import CompletionBackend
from .prompt import DEFAULT_CONFIG, PromptConfig

CHECKPOINT_EVERY = 50


@dataclass(frozen=True)
class SplitSpec:
    test_size: int = 500
    seed: int = 0


@dataclass(frozen=True)
class MixSpec:
    alpha: float
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


@dataclass(frozen=True)
class GenerationJob:
    target_size: int
    ensemble: EnsembleConfig
    universe_ref: str
    backend_id: str
    resume_cursor: int = 0

    def __post_init__(self):
        if not 0 <= self.resume_cursor <= self.target_size:
            raise ValueError("resume_cursor must be within [0, target_size]")

    @property
    def dataset_name(self) -> str:
        return f"GCF_{self.target_size}^{{k={self.ensemble.k_trials}}}"


def make_split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Seeded disjoint (train, test) partition; both keep input order."""
    n = len(dataset.examples)
    if spec.test_size >= n and spec.test_size > 0:
        raise TestTooLarge(spec.test_size, n)
    rng = random.Random(spec.seed)
    test_idx = set(rng.sample(range(n), spec.test_size))
    train_examples = [ex for i, ex in enumerate(dataset.examples) if i not in test_idx]
    test_examples = [ex for i, ex in enumerate(dataset.examples) if i in test_idx]
    train = Dataset.build(
        f"{dataset.name}-train", train_examples, seed=spec.seed, parents=[dataset.name]
    )
    test = Dataset.build(
        f"{dataset.name}-test", test_examples, seed=spec.seed, parents=[dataset.name]
    )
    return train, test


def select_priming_universe(train: Dataset, size: int = 210, seed: int = 0) -> Dataset:
    """Seeded random subset, in permutation order."""
    if size > len(train.examples):
        raise UniverseTooSmall(size, len(train.examples))
    perm = list(train.examples)
    random.Random(seed).shuffle(perm)
    return Dataset.build(
        f"{train.name}-L{size}", perm[:size], seed=seed, parents=[train.name]
    )


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def mix(human: Dataset, synthetic: Dataset, spec: MixSpec) -> Dataset:
    """All human examples plus a seeded sample of round(alpha * |human|)
    synthetic examples, shuffled together."""
    need = round_half_up(spec.alpha * len(human.examples))
    if len(synthetic.examples) < need:
        raise NotEnoughSynthetic(need, len(synthetic.examples))
    rng = random.Random(spec.seed)
    pool = list(synthetic.examples)
    rng.shuffle(pool)
    combined = list(human.examples) + pool[:need]
    rng.shuffle(combined)
    return Dataset.build(
        f"mix({human.name},{synthetic.name},alpha={spec.alpha:g})",
        combined,
        seed=spec.seed,
        parents=[human.name, synthetic.name],
        alpha=spec.alpha,
    )


# -- GCF generation with checkpointing --

def _checkpoint_paths(checkpoint_dir: Path, name: str) -> tuple[Path, Path]:
    safe = name.replace("/", "_")
    return checkpoint_dir / f"{safe}.ckpt.jsonl", checkpoint_dir / f"{safe}.ckpt.manifest.json"


def _job_fingerprint(job: GenerationJob) -> dict:
    return {
        "target_size": job.target_size,
        "k_trials": job.ensemble.k_trials,
        "n_priming": job.ensemble.n_priming,
        "seed": job.ensemble.seed,
        "universe_ref": job.universe_ref,
        "backend_id": job.backend_id,
    }


def _load_checkpoint(job: GenerationJob, checkpoint_dir: Path) -> tuple[GenerationJob, list[LabeledExample]]:
    records_path, manifest_path = _checkpoint_paths(checkpoint_dir, job.dataset_name)
    if not manifest_path.exists():
        return job, []
    state = json.loads(manifest_path.read_text(encoding="utf-8"))
    expected = _job_fingerprint(job)
    if state.get("job") != expected:
        raise ResumeMismatch(f"checkpoint job {state.get('job')} != {expected}")
    done: list[LabeledExample] = []
    with records_path.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if line.strip():
                done.append(record_to_example(json.loads(line), line_no))
    cursor = state.get("resume_cursor", 0)
    if cursor != len(done):
        raise ResumeMismatch(f"cursor {cursor} != {len(done)} checkpointed records")
    return replace(job, resume_cursor=cursor), done


def _write_checkpoint(
    job: GenerationJob, done: list[LabeledExample], checkpoint_dir: Path
) -> None:
    checkpoint_dir.mkdir(parents=True, exist_ok=True)
    records_path, manifest_path = _checkpoint_paths(checkpoint_dir, job.dataset_name)
    lines = [json.dumps(example_to_record(ex), ensure_ascii=False) for ex in done]
    records_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    manifest_path.write_text(
        json.dumps({"job": _job_fingerprint(job), "resume_cursor": len(done)}, indent=2) + "\n",
        encoding="utf-8",
    )


def generate_gcf(
    snippets: list[DialogueSnippet],
    universe: Dataset,
    job: GenerationJob,
    backend: CompletionBackend,
    recognizer,
    prompt_config: PromptConfig = DEFAULT_CONFIG,
    checkpoint_dir: str | Path | None = None,
    checkpoint_every: int = CHECKPOINT_EVERY,
    max_workers: int = 4,
    on_progress: Callable[[int], None] | None = None,
) -> Dataset:
    """Label the first `target_size` snippets with the ensemble summarizer.

    The same K priming blocks (fixed by the job seed) are reused for every
    snippet. Results are assembled in input order regardless of worker
    completion order. With a checkpoint directory, completed examples are
    persisted every `checkpoint_every` examples and on failure, so an
    interrupted run resumes to a byte-identical dataset.
    """
    p = job.target_size
    if len(snippets) < p:
        raise ValueError(f"need {p} snippets, have {len(snippets)}")
    # Validate the universe up front so no backend call happens on a bad job.
    sample_priming_sets(universe.examples, job.ensemble)

    done: list[LabeledExample] = []
    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        job, done = _load_checkpoint(job, checkpoint_dir)

    def label(snippet: DialogueSnippet) -> LabeledExample:
        result = summarize_ens(
            snippet, universe.examples, job.ensemble, backend, recognizer,
            prompt_config=prompt_config, max_workers=max_workers,
        )
        return LabeledExample(
            snippet=snippet,
            summary=result.best.summary,
            provenance=Provenance.synthetic(job.ensemble.k_trials, job.backend_id),
        )

    todo = snippets[job.resume_cursor:p]
    try:
        if todo:
            with ThreadPoolExecutor(max_workers=max_workers) as pool:
                for example in pool.map(label, todo):
                    done.append(example)
                    if on_progress is not None:
                        on_progress(len(done))
                    if checkpoint_dir is not None and len(done) % checkpoint_every == 0:
                        _write_checkpoint(job, done, checkpoint_dir)
    finally:
        if checkpoint_dir is not None:
            _write_checkpoint(job, done, checkpoint_dir)
    return Dataset.build(
        job.dataset_name,
        done,
        seed=job.ensemble.seed,
        parents=[job.universe_ref],
    )


# -- seeded demo dialogue generator --

_DEMO_TOPICS = [
    ("cough", "a cough"),
    ("headache", "a headache"),
    ("nausea", "nausea"),
    ("diarrhea", "diarrhea"),
    ("chest pain", "chest pain"),
    ("sore throat", "a sore throat"),
    ("back pain", "back pain"),
    ("dizziness", "dizziness"),
    ("fatigue", "fatigue"),
    ("chills", "chills"),
    ("swelling", "swelling"),
    ("heartburn", "heartburn"),
    ("insomnia", "insomnia"),
    ("rash", "a rash"),
]

_DEMO_MEDS = ["ibuprofen", "acetaminophen", "amoxicillin", "metformin", "lisinopril", "omeprazole"]


def _demo_rows(count: int, seed: int, source: str) -> list[tuple[DialogueSnippet, str]]:
    rng = random.Random(seed)
    rows = []
    for i in range(count):
        symptom, phrase = rng.choice(_DEMO_TOPICS)
        med = rng.choice(_DEMO_MEDS)
        days = rng.randint(1, 14)
        style = rng.randrange(3)
        if style == 0:
            turns = (
                Turn(Speaker.DOCTOR, f"How long have you had {phrase}?"),
                Turn(Speaker.PATIENT, f"About {days} days now"),
            )
            summary = f"Has had {phrase} for {days} days."
        elif style == 1:
            turns = (
                Turn(Speaker.DOCTOR, f"Do you have {phrase} or any fever?"),
                Turn(Speaker.PATIENT, f"I have {symptom} but no fever"),
            )
            summary = f"Has {symptom} but denies fever."
        else:
            turns = (
                Turn(Speaker.DOCTOR, f"Are you taking anything for the {symptom}?"),
                Turn(Speaker.PATIENT, f"Just {med} when it gets bad"),
            )
            summary = f"Takes {med} as needed for {symptom}."
        rows.append((DialogueSnippet(id=f"{source}-{i}", turns=turns), summary))
    return rows


def synthesize_snippets(count: int, seed: int, source: str = "demo") -> list[DialogueSnippet]:
    """Template-based seeded dialogue snippets over the demo lexicon."""
    return [snippet for snippet, _ in _demo_rows(count, seed, source)]


def synthesize_labeled(name: str, count: int, seed: int) -> Dataset:
    """Seeded demo dataset of human-provenance snippet/summary pairs."""
    examples = [
        LabeledExample(snippet=snippet, summary=Summary(text), provenance=Provenance.human())
        for snippet, text in _demo_rows(count, seed, source=name)
    ]
    return Dataset.build(name, examples, seed=seed)
