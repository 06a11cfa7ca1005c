"""Classify syntactic and structural defects of candidate workflow text."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Optional

from ..model import MATRIX_REF_RE
from .loader import YamlParseError, as_bool, line_of, load

MISSING_SYMBOL = "missing_symbol"
INDENTATION_ERROR = "indentation_error"
MISSING_DEFINITION = "missing_or_misplaced_definition"
INVALID_VALUE = "invalid_value"
SUBTYPES = (MISSING_SYMBOL, INDENTATION_ERROR, MISSING_DEFINITION, INVALID_VALUE)

KNOWN_EVENTS = frozenset("""
branch_protection_rule check_run check_suite create delete deployment deployment_status
discussion discussion_comment fork gollum issue_comment issues label merge_group milestone
page_build project project_card project_column public pull_request pull_request_review
pull_request_review_comment pull_request_target push registry_package release
repository_dispatch schedule status watch workflow_call workflow_dispatch workflow_run
""".split())

TOP_LEVEL_KEYS = {"name", "run-name", "on", "permissions", "env", "defaults", "concurrency", "jobs"}
JOB_LEVEL_KEYS = {"runs-on", "steps", "strategy", "needs", "services", "container", "timeout-minutes"}
STRATEGY_KEYS = {"matrix", "fail-fast", "max-parallel"}
MATRIX_CHILD_KEYS = {"include", "exclude"}


@dataclass(frozen=True)
class SyntaxFinding:
    subtype: str
    line: int
    message: str
    column: Optional[int] = None
    path: str = ""


def _clamp(line: Optional[int], text: str) -> int:
    total = max(1, len(text.splitlines()))
    if line is None:
        return 1
    return min(max(1, line), total)


def _previous_content_line(lines: list[str], index: int) -> tuple[int, str]:
    for i in range(index - 1, -1, -1):
        stripped = lines[i].strip()
        if stripped and not stripped.startswith("#"):
            return i, lines[i]
    return -1, ""


def classify_parse_error(err: YamlParseError, text: str) -> SyntaxFinding:
    """Map a YAML parser failure onto one of the four syntax subtypes."""
    lines = text.splitlines()
    line = _clamp(err.line, text)
    problem = err.problem or ""
    context = err.context or ""
    detail = f"{problem} {context}".strip() or str(err)
    if "'\\t'" in problem or "tab" in problem:
        return SyntaxFinding(INDENTATION_ERROR, line, f"tab used for indentation: {detail}", err.column)
    if "mapping values are not allowed" in problem:
        idx, prev = _previous_content_line(lines, line - 1)
        stripped = prev.strip()
        if prev and ":" not in stripped and not stripped.startswith("-"):
            return SyntaxFinding(
                MISSING_SYMBOL, idx + 1, f"key {stripped!r} is missing its ':'", None
            )
        return SyntaxFinding(INDENTATION_ERROR, line, f"unexpected indentation: {detail}", err.column)
    if "could not find expected ':'" in problem:
        return SyntaxFinding(MISSING_SYMBOL, line, f"missing ':' after key: {detail}", err.column)
    if "'-' indicator" in problem:
        return SyntaxFinding(MISSING_SYMBOL, line, f"missing '-' before sequence item: {detail}", err.column)
    if "quoted scalar" in context or "end of stream" in problem:
        return SyntaxFinding(MISSING_SYMBOL, line, f"unterminated quotation: {detail}", err.column)
    if "flow" in context or "',' or ']'" in problem or "',' or '}'" in problem:
        return SyntaxFinding(MISSING_SYMBOL, line, f"unbalanced flow collection: {detail}", err.column)
    if "expected <block end>" in problem or "did not find expected key" in problem:
        return SyntaxFinding(INDENTATION_ERROR, line, f"misaligned block: {detail}", err.column)
    return SyntaxFinding(MISSING_SYMBOL, line, f"low confidence: unparseable YAML: {detail}", err.column)


def _has_space(value: str) -> bool:
    return any(c.isspace() for c in value)


class _Checker:
    def __init__(self, text: str):
        self.text = text
        self.findings: list[SyntaxFinding] = []

    def add(self, subtype, line, message, path):
        self.findings.append(SyntaxFinding(subtype, _clamp(line, self.text), message, None, path))

    def run(self, root: Any) -> None:
        if not isinstance(root, dict):
            self.add(MISSING_DEFINITION, 1, "document is not a mapping of workflow keys", "")
            return
        for key in root:
            if key in JOB_LEVEL_KEYS:
                self.add(INDENTATION_ERROR, line_of(root, key),
                         f"job-level key {key!r} is at the top level; it belongs under a job", key)
        self.check_triggers(root)
        jobs = root.get("jobs")
        if "jobs" not in root:
            self.add(MISSING_DEFINITION, 1, "workflow has no 'jobs' section", "jobs")
            return
        if isinstance(jobs, str):
            self.add(MISSING_SYMBOL, line_of(root, "jobs"),
                     f"'jobs' holds the text {str(jobs)!r}; job ids need a trailing ':'", "jobs")
            return
        if not isinstance(jobs, dict):
            self.add(INVALID_VALUE, line_of(root, "jobs"), "'jobs' must be a mapping", "jobs")
            return
        for job_id, body in jobs.items():
            self.check_job(jobs, str(job_id), body)

    def check_triggers(self, root: dict) -> None:
        if "on" not in root:
            return
        value = root["on"]
        line = line_of(root, "on")
        if isinstance(value, str):
            names = [value]
        elif isinstance(value, list):
            names = list(value)
        elif isinstance(value, dict):
            names = list(value.keys())
        else:
            names = []
        for name in names:
            if not isinstance(name, str):
                continue
            name_line = getattr(name, "line", None) or line
            if _has_space(name):
                self.add(MISSING_SYMBOL, name_line,
                         f"trigger list {str(name)!r} lacks ':' or '-' separators between events", "on")
            elif name not in KNOWN_EVENTS:
                self.add(INVALID_VALUE, name_line, f"unknown trigger event {str(name)!r}", "on")

    def check_job(self, jobs: dict, job_id: str, body: Any) -> None:
        path = f"jobs.{job_id}"
        line = line_of(jobs, job_id)
        if not isinstance(body, dict):
            if isinstance(body, str) and _has_space(body):
                self.add(MISSING_SYMBOL, line, f"job {job_id!r} body is plain text; keys need ':'", path)
            else:
                self.add(INVALID_VALUE, line, f"job {job_id!r} must be a mapping", path)
            return
        if "runs-on" not in body and "uses" not in body:
            self.add(MISSING_DEFINITION, line, f"job {job_id!r} does not define runs-on", path)
        for key in body:
            if key == "matrix":
                self.add(MISSING_DEFINITION, line_of(body, key),
                         f"matrix of job {job_id!r} must be defined under strategy", f"{path}.matrix")
            elif key in MATRIX_CHILD_KEYS or key == "run":
                self.add(INDENTATION_ERROR, line_of(body, key),
                         f"key {key!r} is misaligned at job level", f"{path}.{key}")
        for dep in (body.get("needs") if isinstance(body.get("needs"), list) else [body.get("needs")]):
            if isinstance(dep, str) and dep not in jobs:
                self.add(MISSING_DEFINITION, line_of(body, "needs"),
                         f"job {job_id!r} needs undefined job {str(dep)!r}", f"{path}.needs")
        strategy = body.get("strategy")
        matrix = None
        if isinstance(strategy, dict):
            matrix = self.check_strategy(strategy, path)
        defined = _matrix_names(matrix)
        if not isinstance(matrix, str):
            for ref, ref_line in _matrix_refs(body):
                if ref not in defined:
                    what = "no strategy.matrix is defined" if matrix is None else f"matrix has no axis {ref!r}"
                    self.add(MISSING_DEFINITION, ref_line,
                             f"job {job_id!r} references matrix.{ref} but {what}", path)
        steps = body.get("steps")
        if "steps" in body:
            if isinstance(steps, dict):
                self.add(MISSING_SYMBOL, line_of(body, "steps"),
                         "steps must be a sequence; items are missing their '-'", f"{path}.steps")
            elif isinstance(steps, list):
                for i, step in enumerate(steps):
                    self.check_step(steps, i, step, f"{path}.steps[{i}]")
            else:
                self.add(INVALID_VALUE, line_of(body, "steps"), "steps must be a sequence", f"{path}.steps")

    def check_strategy(self, strategy: dict, path: str):
        for key in strategy:
            if key in MATRIX_CHILD_KEYS:
                self.add(INDENTATION_ERROR, line_of(strategy, key),
                         f"{key!r} is aligned with matrix instead of nested under it",
                         f"{path}.strategy.{key}")
            elif key not in STRATEGY_KEYS and _looks_like_axis(key):
                self.add(INDENTATION_ERROR, line_of(strategy, key),
                         f"{key!r} is not a strategy key; matrix axes belong under matrix",
                         f"{path}.strategy.{key}")
        if "fail-fast" in strategy and as_bool(strategy["fail-fast"]) is None \
                and not str(strategy["fail-fast"]).startswith("${{"):
            self.add(INVALID_VALUE, line_of(strategy, "fail-fast"), "fail-fast must be a boolean",
                     f"{path}.strategy.fail-fast")
        if "max-parallel" in strategy and not re.fullmatch(r"\d+|\$\{\{.*\}\}", str(strategy["max-parallel"])):
            self.add(INVALID_VALUE, line_of(strategy, "max-parallel"), "max-parallel must be an integer",
                     f"{path}.strategy.max-parallel")
        matrix = strategy.get("matrix")
        if matrix is not None and not isinstance(matrix, (dict, str)):
            self.add(INVALID_VALUE, line_of(strategy, "matrix"), "matrix must be a mapping",
                     f"{path}.strategy.matrix")
        return matrix

    def check_step(self, steps: list, index: int, step: Any, path: str) -> None:
        line = line_of(steps, index)
        if not isinstance(step, dict):
            self.add(MISSING_SYMBOL, line,
                     f"step {str(step)!r} is plain text; expected 'uses:' or 'run:' mapping", path)
            return
        for key in step:
            if key in JOB_LEVEL_KEYS:
                self.add(INDENTATION_ERROR, line_of(step, key), f"job-level key {key!r} inside a step",
                         f"{path}.{key}")
        has_uses, has_run = step.get("uses") is not None, step.get("run") is not None
        if has_uses and has_run:
            self.add(INVALID_VALUE, line, "a step cannot have both uses and run", path)
        elif not has_uses and not has_run:
            self.add(MISSING_DEFINITION, line, "step defines neither uses nor run", path)
        if has_uses:
            ref = str(step["uses"])
            if "@" not in ref and not ref.startswith(("./", "docker://")):
                self.add(INVALID_VALUE, line_of(step, "uses"), f"action {ref!r} has no @version",
                         f"{path}.uses")
            with_args = step.get("with")
            if "setup-" in ref and isinstance(with_args, dict):
                for key, value in with_args.items():
                    if not str(key).endswith("-version"):
                        continue
                    joined = isinstance(value, str) and "," in value and "${{" not in value
                    if isinstance(value, list) or joined:
                        self.add(INVALID_VALUE, line_of(with_args, key),
                                 f"{key} expects a single version value, got {_show(value)}",
                                 f"{path}.with.{key}")


def _looks_like_axis(key: str) -> bool:
    return key.endswith("-version") or key in ("os", "arch", "python", "node")


def _show(value) -> str:
    if isinstance(value, list):
        return "[" + ", ".join(str(v) for v in value) + "]"
    return repr(str(value))


def _matrix_names(matrix) -> set[str]:
    names: set[str] = set()
    if isinstance(matrix, dict):
        for key, value in matrix.items():
            if key == "include":
                for entry in value if isinstance(value, list) else []:
                    if isinstance(entry, dict):
                        names.update(entry)
            elif key != "exclude":
                names.add(key)
    return names


def _matrix_refs(value, default_line=None):
    """(axis, line) pairs for every ``${{ matrix.X }}`` in a job body."""
    refs = []
    if isinstance(value, dict):
        for k, v in value.items():
            if k == "strategy":
                continue
            refs.extend(_matrix_refs(v, line_of(value, k)))
    elif isinstance(value, list):
        for i, v in enumerate(value):
            refs.extend(_matrix_refs(v, line_of(value, i)))
    elif isinstance(value, str):
        line = getattr(value, "line", None) or default_line
        refs.extend((name, line) for name in MATRIX_REF_RE.findall(value))
    return refs


def check_syntax(text: str) -> list[SyntaxFinding]:
    """Findings for ``text``; an unparseable document yields at least one."""
    if not text or not text.strip():
        return [SyntaxFinding(MISSING_DEFINITION, 1, "empty workflow document")]
    try:
        root = load(text)
    except YamlParseError as err:
        return [classify_parse_error(err, text)]
    checker = _Checker(text)
    checker.run(root)
    return sorted(checker.findings, key=lambda f: (f.line, f.path, f.subtype))


__all__ = ["SyntaxFinding", "check_syntax", "classify_parse_error", "SUBTYPES", "KNOWN_EVENTS",
           "MISSING_SYMBOL", "INDENTATION_ERROR", "MISSING_DEFINITION", "INVALID_VALUE"]
