"""The medically-aware K-trial ensemble summarizer.

For one dialogue snippet: extract its concept set, run K completion calls
each primed with a disjoint block of N labeled examples, extract concepts
from every candidate summary, and keep the candidate with the highest
concept recall against the snippet. Ties break to the lowest trial index so
results are reproducible.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .corpus import DialogueSnippet, LabeledExample, Summary
from .errors import BackendError, UniverseTooSmall
from .llmclient import CompletionBackend, CompletionRequest
from .medner import concept_set
from .prompt import DEFAULT_CONFIG, PromptConfig, build_prompt, parse_completion, render_snippet

DEFAULT_TRIALS = 10
MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class EnsembleConfig:
    k_trials: int = DEFAULT_TRIALS
    n_priming: int = DEFAULT_CONFIG.max_examples
    seed: int = 0

    def __post_init__(self):
        if self.k_trials < 1 or self.n_priming < 1:
            raise ValueError("k_trials and n_priming must be >= 1")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class CandidateSummary:
    index: int
    summary: Summary
    concepts: frozenset[str]
    recall: float
    priming_ids: tuple[str, ...]


@dataclass(frozen=True)
class EnsembleResult:
    snippet_id: str
    snippet_concepts: frozenset[str]
    candidates: tuple[CandidateSummary, ...]
    chosen: int

    @property
    def best(self) -> CandidateSummary:
        return self.candidates[self.chosen]


def concept_recall(candidate_concepts: frozenset[str], snippet_concepts: frozenset[str]) -> float:
    """|C_i ∩ C*| / |C*|; 1.0 when the snippet has no recognizable concepts
    (vacuous coverage, every candidate ties)."""
    if not snippet_concepts:
        return 1.0
    return len(candidate_concepts & snippet_concepts) / len(snippet_concepts)


def sample_priming_sets(
    universe: list[LabeledExample], config: EnsembleConfig
) -> list[list[LabeledExample]]:
    """K pairwise-disjoint blocks of N drawn from a seeded permutation of the
    universe; deterministic for a given (universe order, seed)."""
    need = config.k_trials * config.n_priming
    if len(universe) < need:
        raise UniverseTooSmall(need, len(universe))
    perm = list(universe)
    random.Random(config.seed).shuffle(perm)
    n = config.n_priming
    return [perm[i * n:(i + 1) * n] for i in range(config.k_trials)]


def summarize_single(
    snippet: DialogueSnippet,
    priming_set: list[LabeledExample],
    backend: CompletionBackend,
    prompt_config: PromptConfig = DEFAULT_CONFIG,
) -> Summary:
    """One plain completion call: build prompt, complete, parse."""
    prompt = build_prompt(priming_set, snippet, prompt_config)
    raw = backend.complete(CompletionRequest(prompt=prompt.text, stop=prompt.stop_sequences))
    return parse_completion(raw, prompt_config)


def summarize_ens(
    snippet: DialogueSnippet,
    universe: list[LabeledExample],
    config: EnsembleConfig,
    backend: CompletionBackend,
    recognizer,
    prompt_config: PromptConfig = DEFAULT_CONFIG,
    max_workers: int = 4,
) -> EnsembleResult:
    """Run the K-trial ensemble for one snippet.

    Trials may run concurrently; candidates are re-ordered by trial index
    before the argmax, so concurrency never changes the outcome. A backend
    failure in any trial fails the whole snippet, annotated with the trial
    index.
    """
    priming_sets = sample_priming_sets(universe, config)
    rendered = render_snippet(snippet, prompt_config)
    snippet_concepts = concept_set(recognizer.extract(rendered))

    def run_trial(index: int) -> CandidateSummary:
        prompt = build_prompt(priming_sets[index], snippet, prompt_config)
        request = CompletionRequest(prompt=prompt.text, stop=prompt.stop_sequences)
        try:
            raw = backend.complete(request)
        except BackendError as exc:
            exc.trial_index = index
            raise
        summary = parse_completion(raw, prompt_config)
        concepts = concept_set(recognizer.extract(summary.text))
        return CandidateSummary(
            index=index,
            summary=summary,
            concepts=concepts,
            recall=concept_recall(concepts, snippet_concepts),
            priming_ids=tuple(ex.id for ex in priming_sets[index]),
        )

    if config.k_trials == 1 or max_workers <= 1:
        candidates = [run_trial(i) for i in range(config.k_trials)]
    else:
        with ThreadPoolExecutor(max_workers=min(max_workers, config.k_trials)) as pool:
            candidates = list(pool.map(run_trial, range(config.k_trials)))
    candidates.sort(key=lambda c: c.index)

    chosen = 0
    for cand in candidates[1:]:
        if cand.recall > candidates[chosen].recall:
            chosen = cand.index
    return EnsembleResult(
        snippet_id=snippet.id,
        snippet_concepts=snippet_concepts,
        candidates=tuple(candidates),
        chosen=chosen,
    )
