"""Lint candidate workflows against the 17-type issue taxonomy."""
from __future__ import annotations

from typing import Optional

from ..frontend.loader import YamlParseError, load
from ..frontend.syntax import check_syntax
from ..frontend.workflow import NotAWorkflowError, workflow_from_tree
from .environment import detect_environment
from .issues import (
    ADVISORY,
    BLOCKING,
    CATEGORY_OF,
    ISSUE_TYPES,
    SEVERITY,
    TAXONOMY,
    Issue,
    LintContext,
    count_by_category,
    count_by_type,
    make_issue,
)
from .logic import detect_logic
from .platform import detect_platform
from .walk import text_line


def detect_syntax(candidate_text: str) -> list[Issue]:
    return [
        make_issue(f.subtype, f.path, f.line, f.message, text_line(candidate_text, f.line))
        for f in check_syntax(candidate_text)
    ]


def lint(candidate_text: str, ctx: Optional[LintContext] = None) -> list[Issue]:
    """All detectors, ordered by (line, path)."""
    ctx = ctx or LintContext()
    issues = detect_syntax(candidate_text)
    try:
        tree = load(candidate_text)
        workflow = workflow_from_tree(tree)
    except (YamlParseError, NotAWorkflowError):
        return sorted(issues, key=Issue.sort_key)
    issues += detect_platform(workflow, candidate_text, ctx, tree=tree)
    issues += detect_environment(workflow, ctx, tree=tree, text=candidate_text)
    issues += detect_logic(ctx.source, workflow, tree=tree, package_table=ctx.package_table)
    return sorted(issues, key=Issue.sort_key)


def blocking(issues) -> list[Issue]:
    return [i for i in issues if i.blocking]


def logic_skipped(ctx: LintContext) -> bool:
    return ctx.source is None


__all__ = [
    "lint", "detect_syntax", "detect_platform", "detect_environment", "detect_logic",
    "Issue", "LintContext", "TAXONOMY", "CATEGORY_OF", "ISSUE_TYPES", "SEVERITY",
    "BLOCKING", "ADVISORY", "blocking", "logic_skipped", "count_by_type", "count_by_category",
    "make_issue",
]
