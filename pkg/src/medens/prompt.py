"""Few-shot prompt construction and completion parsing.

Wire format per priming example: `{snippet_text}[SUMMARIZED]{summary_text}[STOP]`,
with conversational turns inside snippet_text joined by "[SEP] ". The prompt
ends with the rendered target snippet plus "[SUMMARIZED]", and "[STOP]" is the
stop sequence handed to the backend.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import DialogueSnippet, LabeledExample, Summary
from .errors import EmptyExamples, ReservedTokenInText, TooManyExamples

# The maximum priming-set size the real backend's context window allowed.
MAX_PRIMING_EXAMPLES = 21


@dataclass(frozen=True)
class PromptConfig:
    sep_token: str = "[SEP]"
    summarize_token: str = "[SUMMARIZED]"
    stop_token: str = "[STOP]"
    max_examples: int = MAX_PRIMING_EXAMPLES

    def __post_init__(self):
        tokens = (self.sep_token, self.summarize_token, self.stop_token)
        if any(not t for t in tokens) or len(set(tokens)) != 3:
            raise ValueError("prompt tokens must be non-empty and pairwise distinct")
        if self.max_examples < 1:
            raise ValueError("max_examples must be >= 1")

    def tokens(self) -> tuple[str, str, str]:
        return (self.sep_token, self.summarize_token, self.stop_token)


DEFAULT_CONFIG = PromptConfig()


@dataclass(frozen=True)
class Prompt:
    text: str
    stop_sequences: tuple[str, ...]


def _check_reserved(text: str, config: PromptConfig, where: str) -> None:
    for token in config.tokens():
        if token in text:
            raise ReservedTokenInText(token, where)


def render_snippet(snippet: DialogueSnippet, config: PromptConfig = DEFAULT_CONFIG) -> str:
    """Turn texts joined by the separator token plus a space, role prefixes
    omitted; no leading or trailing separator."""
    for turn in snippet.turns:
        _check_reserved(turn.text, config, f"turn text of {snippet.id!r}")
    return (config.sep_token + " ").join(turn.text for turn in snippet.turns)


def build_prompt(
    examples: list[LabeledExample],
    target: DialogueSnippet,
    config: PromptConfig = DEFAULT_CONFIG,
) -> Prompt:
    if not examples:
        raise EmptyExamples()
    if len(examples) > config.max_examples:
        raise TooManyExamples(len(examples), config.max_examples)
    parts: list[str] = []
    for ex in examples:
        if ex.summary is None:
            raise ValueError(f"priming example {ex.id!r} has no summary")
        _check_reserved(ex.summary.text, config, f"summary of {ex.id!r}")
        parts.append(
            render_snippet(ex.snippet, config)
            + config.summarize_token
            + ex.summary.text
            + config.stop_token
        )
    parts.append(render_snippet(target, config) + config.summarize_token)
    return Prompt(text="".join(parts), stop_sequences=(config.stop_token,))


def parse_completion(raw: str, config: PromptConfig = DEFAULT_CONFIG) -> Summary:
    """Truncate at the first stop token, trim whitespace; empty is a legal
    degenerate summary."""
    idx = raw.find(config.stop_token)
    if idx != -1:
        raw = raw[:idx]
    return Summary(raw.strip())
