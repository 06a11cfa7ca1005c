"""Issue taxonomy: 4 categories, 17 types, fixed severities."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Optional

from ..model import TravisConfig
from ..registry import (
    ActionRegistry,
    CredentialSpec,
    PackageSpec,
    load_credentials,
    load_denylist,
    load_package_table,
)

SYNTAX_ERROR = "syntax_error"
PLATFORM_DISCREPANCY = "platform_discrepancy"
ENVIRONMENT_ERROR = "environment_error"
LOGIC_INCONSISTENCY = "logic_inconsistency"

TAXONOMY: dict[str, tuple[str, ...]] = {
    SYNTAX_ERROR: (
        "missing_symbol",
        "indentation_error",
        "missing_or_misplaced_definition",
        "invalid_value",
    ),
    PLATFORM_DISCREPANCY: (
        "unsupported_key",
        "unsupported_expression",
        "unsupported_architecture",
        "trailing_zero",
        "unspecified_default",
        "missing_package",
    ),
    ENVIRONMENT_ERROR: (
        "obsolete_action",
        "missing_secret",
    ),
    LOGIC_INCONSISTENCY: (
        "trigger_event_misconfig",
        "execution_order_error",
        "condition_misconfig",
        "missing_task",
        "redundant_task",
    ),
}

CATEGORY_OF = {t: cat for cat, types in TAXONOMY.items() for t in types}
ISSUE_TYPES = tuple(CATEGORY_OF)

BLOCKING = "blocking"
ADVISORY = "advisory"

# Everything that breaks a real run is blocking; logic drift still builds.
SEVERITY = {t: (ADVISORY if CATEGORY_OF[t] == LOGIC_INCONSISTENCY else BLOCKING) for t in ISSUE_TYPES}


@dataclass(frozen=True)
class Issue:
    category: str
    issue_type: str
    path: str
    line: Optional[int]
    severity: str
    message: str
    evidence: str = ""

    def __post_init__(self):
        if CATEGORY_OF.get(self.issue_type) != self.category:
            raise ValueError(f"{self.issue_type!r} does not belong to category {self.category!r}")
        if self.severity != SEVERITY[self.issue_type]:
            raise ValueError(f"{self.issue_type!r} must be {SEVERITY[self.issue_type]}")

    @property
    def blocking(self) -> bool:
        return self.severity == BLOCKING

    def sort_key(self):
        return (self.line if self.line is not None else float("inf"), self.path, self.issue_type, self.message)

    def render(self) -> str:
        where = f"line {self.line}" if self.line is not None else "line ?"
        text = f"{where}: [{self.severity}] {self.issue_type} at {self.path or '<document>'}: {self.message}"
        if self.evidence:
            text += f" | {self.evidence}"
        return text

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Issue":
        return cls(**{k: data.get(k) for k in ("category", "issue_type", "path", "line",
                                                 "severity", "message", "evidence")})


def make_issue(issue_type: str, path: str, line: Optional[int], message: str, evidence: str = "") -> Issue:
    return Issue(CATEGORY_OF[issue_type], issue_type, path, line, SEVERITY[issue_type], message, evidence)


@dataclass(frozen=True)
class LintContext:
    source: Optional[TravisConfig] = None
    available_secrets: frozenset = frozenset({"GITHUB_TOKEN"})
    action_registry: ActionRegistry = field(default_factory=ActionRegistry.load)
    package_table: Mapping[str, PackageSpec] = field(default_factory=load_package_table)
    credentials: Mapping[str, CredentialSpec] = field(default_factory=load_credentials)
    denylist: Mapping[str, frozenset] = field(default_factory=load_denylist)

    def __post_init__(self):
        # GITHUB_TOKEN is provided to every run.
        object.__setattr__(self, "available_secrets",
                           frozenset(self.available_secrets) | {"GITHUB_TOKEN"})


def count_by_type(issues) -> dict[str, int]:
    counts = {t: 0 for t in ISSUE_TYPES}
    for issue in issues:
        counts[issue.issue_type] += 1
    return counts


def count_by_category(issues) -> dict[str, int]:
    counts = {c: 0 for c in TAXONOMY}
    for issue in issues:
        counts[issue.category] += 1
    return counts
