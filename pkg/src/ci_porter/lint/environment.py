"""Environment error detectors: obsolete actions and missing secrets."""
from __future__ import annotations

import re
from typing import Any, Optional

from ..model import ActionRef
from ..transpiler import invoked_tools
from .issues import Issue, LintContext, make_issue
from .walk import jobs, line_at, run_lines, scalars, steps, text_line

SECRET_RE = re.compile(r"\bsecrets\.([A-Za-z_][A-Za-z0-9_]*)")


def _env_names(value) -> set[str]:
    return {str(k) for k in value} if isinstance(value, dict) else set()


def detect_environment(candidate, ctx: LintContext, tree: Optional[Any] = None, text: str = "") -> list[Issue]:
    """``tree`` (the loaded candidate) supplies line numbers; without it the
    rules run on the Workflow model and lines are left unset."""
    if tree is None:
        from ..frontend.render import render_workflow
        from ..frontend.loader import load
        text = render_workflow(candidate)
        tree = load(text)
    if not isinstance(tree, dict):
        return []
    issues: list[Issue] = []

    def add(issue_type, path, line, message, evidence=None):
        issues.append(make_issue(issue_type, path, line, message,
                                 text_line(text, line) if evidence is None else evidence))

    registry = ctx.action_registry
    for job_id, job in jobs(tree):
        for i, step in steps(job):
            uses = step.get("uses")
            if isinstance(uses, str):
                ref = ActionRef.parse(uses)
                if registry.is_obsolete(ref):
                    add("obsolete_action", f"jobs.{job_id}.steps[{i}].uses", line_at(uses, step, "uses"),
                        f"{ref} is below the maintained minimum {registry.minimum_for(ref.name)}")

    for path, container, key, value in scalars(tree, ""):
        for name in SECRET_RE.findall(str(value)):
            if name not in ctx.available_secrets:
                add("missing_secret", path, line_at(value, container, key),
                    f"secret {name} is not configured for this repository")

    workflow_env = _env_names(tree.get("env"))
    for job_id, job in jobs(tree):
        job_env = workflow_env | _env_names(job.get("env"))
        for i, step in steps(job):
            env = job_env | _env_names(step.get("env"))
            with_args = step.get("with") if isinstance(step.get("with"), dict) else {}
            for cmd in run_lines(step):
                tools = invoked_tools(cmd)
                for spec in ctx.credentials.values():
                    if not tools & set(spec.executables):
                        continue
                    satisfied = bool(env & set(spec.env)) or "secrets." in cmd or any(
                        f"${n}" in cmd or "${" + n + "}" in cmd for n in spec.env)
                    if not satisfied and "token" in {str(k).lower() for k in with_args}:
                        satisfied = True
                    if not satisfied:
                        add("missing_secret", f"jobs.{job_id}.steps[{i}].run", line_at(step.get("run"), step, "run"),
                            f"{spec.tool} needs one of {', '.join(spec.env)} but no token is passed", cmd)
                    break
    return issues


__all__ = ["detect_environment", "SECRET_RE"]
