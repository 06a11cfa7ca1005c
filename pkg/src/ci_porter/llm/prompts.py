"""Prompt templates, guideline sets and one-shot example selection."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from string import Template
from typing import Mapping, Optional, Sequence

from ..lint.issues import ISSUE_TYPES
from ..metrics import TokenVector, cosine_similarity, MetricError
from ..registry import PathLike, read_data

BASIC = "basic"
ONE_SHOT = "one_shot"
GUIDELINE = "guideline"
REFINEMENT = "refinement"
PROMPT_STRATEGIES = (BASIC, ONE_SHOT, GUIDELINE, REFINEMENT)

SOURCE_PLATFORM = "Travis CI"
TARGET_PLATFORM = "GitHub Actions"

OUTPUT_CONTROL = (
    "Reply with the complete GitHub Actions workflow YAML and nothing else: "
    "no explanations, no notes, no text before or after the configuration."
)

_TASK = (
    "You are migrating a project's continuous integration setup. Translate the "
    "configuration below from the source CI platform to the target CI platform so "
    "that it builds and tests the project in the same way."
)

_PLATFORMS = f"Source platform: {SOURCE_PLATFORM}\nTarget platform: {TARGET_PLATFORM}"

TEMPLATES = {
    BASIC: f"""{_TASK}

{_PLATFORMS}

Configuration to translate:
$SOURCE_CONFIGURATION

{OUTPUT_CONTROL}
""",
    ONE_SHOT: f"""{_TASK}

{_PLATFORMS}

Here is one example of a {SOURCE_PLATFORM} configuration and its {TARGET_PLATFORM} translation.

Example {SOURCE_PLATFORM} configuration:
$EXAMPLE_SOURCE

Example {TARGET_PLATFORM} workflow:
$EXAMPLE_TARGET

Configuration to translate:
$SOURCE_CONFIGURATION

{OUTPUT_CONTROL}
""",
    GUIDELINE: f"""{_TASK}

{_PLATFORMS}

Apply these translation rules:
$GUIDELINES

Configuration to translate:
$SOURCE_CONFIGURATION

{OUTPUT_CONTROL}
""",
    REFINEMENT: f"""A {TARGET_PLATFORM} workflow translated from a {SOURCE_PLATFORM} configuration failed to build. Correct the workflow so that the build succeeds while keeping the behaviour of the original configuration.

{_PLATFORMS}

Workflow that failed:
$FAULTY_CONFIGURATION

Build errors:
$ERROR_MESSAGES

Original {SOURCE_PLATFORM} configuration:
$SOURCE_CONFIGURATION

{OUTPUT_CONTROL}
""",
}

_SLOT_RE = re.compile(r"\$([A-Z_]+)")


class MissingSlotError(KeyError):
    def __init__(self, slot: str, strategy: str):
        super().__init__(slot)
        self.slot = slot
        self.strategy = strategy

    def __str__(self):
        return f"prompt strategy {self.strategy!r} needs slot {self.slot}"


def required_slots(strategy: str) -> tuple[str, ...]:
    return tuple(dict.fromkeys(_SLOT_RE.findall(TEMPLATES[strategy])))


@dataclass(frozen=True)
class PromptInstance:
    strategy: str
    text: str
    slots: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class GuidelineSet:
    rules: tuple[tuple[str, str], ...]

    def __post_init__(self):
        covered = {t for t, _ in self.rules}
        unknown = covered - set(ISSUE_TYPES)
        if unknown:
            raise ValueError(f"guidelines for unknown issue types: {sorted(unknown)}")
        missing = [t for t in ISSUE_TYPES if t not in covered]
        if missing:
            raise ValueError(f"no guideline for issue types: {missing}")

    @classmethod
    def load(cls, path: Optional[PathLike] = None) -> "GuidelineSet":
        data = read_data("guidelines.yaml", path) or []
        return cls(tuple((str(item["type"]), str(item["rule"]).strip()) for item in data))

    def render(self) -> str:
        return "\n".join(f"{i}. {text}" for i, (_, text) in enumerate(self.rules, 1))


def build_prompt(strategy: str, source_text: str, context: Optional[Mapping[str, str]] = None) -> PromptInstance:
    if strategy not in TEMPLATES:
        raise ValueError(f"unknown prompt strategy {strategy!r}")
    if not source_text or not source_text.strip():
        raise ValueError("source configuration is empty")
    slots = {"SOURCE_CONFIGURATION": source_text.rstrip("\n")}
    context = dict(context or {})
    if strategy == GUIDELINE and "GUIDELINES" not in context:
        context["GUIDELINES"] = GuidelineSet.load().render()
    for slot in required_slots(strategy):
        if slot == "SOURCE_CONFIGURATION":
            continue
        if slot not in context or context[slot] is None:
            raise MissingSlotError(slot, strategy)
        slots[slot] = str(context[slot]).rstrip("\n")
    text = Template(TEMPLATES[strategy]).substitute(slots)
    return PromptInstance(strategy, text, slots)


def select_one_shot_example(source_text: str, pool: Sequence):
    """Pool record whose source is most similar (term-frequency cosine);
    the first one wins a tie."""
    if not pool:
        raise ValueError("one-shot example pool is empty")
    query = TokenVector.from_text(source_text)
    best, best_score = pool[0], -1.0
    for record in pool:
        try:
            score = cosine_similarity(query, TokenVector.from_text(record.source_text))
        except MetricError:
            score = 0.0
        if score > best_score:
            best, best_score = record, score
    return best
