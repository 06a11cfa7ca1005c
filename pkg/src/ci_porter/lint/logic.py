"""Logic inconsistency detectors.  These compare the candidate with its
Travis source, so they only run when a source is available."""
from __future__ import annotations

from typing import Any, Optional

from ..model import TravisConfig, Workflow
from ..registry import PackageSpec
from ..transpiler import PHASE_CONDITIONS, installs, invoked_tools, slug
from .issues import Issue, make_issue
from .walk import jobs as tree_jobs, line_at, steps as tree_steps

# Source commands that a marketplace action replaces.
ACTION_EQUIVALENTS = {
    "codecov": ("codecov/codecov-action",),
    "coveralls": ("coverallsapp/github-action",),
}


def source_command_phases(config: TravisConfig) -> dict[str, set[str]]:
    """normalized command -> phases it appears in, across the whole config."""
    index: dict[str, set[str]] = {}

    def add(phases):
        for phase, commands in phases.items():
            for c in commands:
                index.setdefault(c.normalized, set()).add(phase)

    add(config.phases)
    for stage in config.stages:
        for job in stage.jobs:
            add(job.phases)
    for job in config.matrix_extras.include:
        add(job.phases)
    return index


def condition_class(condition: Optional[str]) -> str:
    if condition is None:
        return "success"
    text = str(condition).replace(" ", "")
    if "failure()" in text:
        return "failure"
    if "always()" in text or "!cancelled()" in text:
        return "always"
    if "cancelled()" in text:
        return "cancelled"
    return "success"


def _expected_class(phase: str) -> str:
    return condition_class(PHASE_CONDITIONS.get(phase))


def _closure(wf: Workflow) -> dict[str, set[str]]:
    reach: dict[str, set[str]] = {}

    def visit(job_id, trail=()):
        if job_id in reach:
            return reach[job_id]
        if job_id in trail or job_id not in wf.jobs:
            return set()
        out: set[str] = set()
        for dep in wf.jobs[job_id].needs:
            out.add(dep)
            out |= visit(dep, trail + (job_id,))
        reach[job_id] = out
        return out

    for job_id in wf.jobs:
        visit(job_id)
    return reach


class _Lines:
    """Line lookup for model paths, via the loaded candidate tree."""

    def __init__(self, tree: Any):
        self.tree = tree if isinstance(tree, dict) else {}

    def root(self, key):
        return line_at(None, self.tree, key) if key in self.tree else None

    def job(self, job_id, key=None):
        for jid, body in tree_jobs(self.tree):
            if jid == job_id:
                if key is not None and key in body:
                    return line_at(None, body, key)
                return line_at(None, self.tree.get("jobs"), jid)
        return None

    def step(self, job_id, index, key="run"):
        for jid, body in tree_jobs(self.tree):
            if jid == job_id:
                for i, step in tree_steps(body):
                    if i == index:
                        return line_at(step.get(key), step, key)
        return None


def _run_steps(wf: Workflow):
    for job_id, job in wf.jobs.items():
        for i, step in enumerate(job.steps):
            if step.kind == "run":
                yield job_id, i, step


def _uses_names(wf: Workflow) -> set[str]:
    return {s.uses_ref.name for job in wf.jobs.values() for s in job.steps
            if s.kind == "uses" and s.uses_ref is not None}


def detect_logic(source: Optional[TravisConfig], candidate: Workflow, tree: Any = None,
                 package_table: Optional[dict[str, PackageSpec]] = None) -> list[Issue]:
    if source is None:
        return []
    lines = _Lines(tree)
    issues: list[Issue] = []
    issues += _triggers(source, candidate, lines)
    issues += _execution_order(source, candidate, lines)
    index = source_command_phases(source)
    issues += _conditions(index, candidate, lines)
    issues += _missing_tasks(source, index, candidate, lines)
    issues += _redundant_tasks(index, candidate, lines, package_table or {})
    return issues


def _triggers(source: TravisConfig, wf: Workflow, lines: _Lines) -> list[Issue]:
    out = []
    line = lines.root("on")

    def add(message):
        out.append(make_issue("trigger_event_misconfig", "on", line, message))

    push = wf.triggers.get("push", "absent")
    if push == "absent":
        add("push events no longer trigger the build")
    elif push is not None:
        if push.tags is not None and push.branches is None and push.branches_ignore is None:
            add("push trigger is restricted to tags, so ordinary pushes no longer build")
        elif (push.branches is not None or push.branches_ignore is not None) and source.branch_filter is None:
            add("push trigger is restricted to branches although the source builds every branch")
    if "pull_request" not in wf.triggers:
        add("pull requests no longer trigger the build")
    return out


def _execution_order(source: TravisConfig, wf: Workflow, lines: _Lines) -> list[Issue]:
    if len(source.stages) < 2:
        return []
    by_stage: list[list[str]] = []
    for stage in source.stages:
        ids = [job_id for job_id, job in wf.jobs.items()
               if job_id == slug(stage.name) or job.extras.get("name") == stage.name]
        by_stage.append(ids)
    reach = _closure(wf)
    out = []
    for before, after, stage in zip(by_stage, by_stage[1:], source.stages[1:]):
        for job_id in after:
            missing = [b for b in before if b not in reach.get(job_id, set())]
            if missing:
                out.append(make_issue(
                    "execution_order_error", f"jobs.{job_id}.needs", lines.job(job_id, "needs"),
                    f"stage {stage.name!r} must wait for {', '.join(missing)} but the job does not need it",
                ))
    return out


def _conditions(index: dict[str, set[str]], wf: Workflow, lines: _Lines) -> list[Issue]:
    out = []
    for job_id, i, step in _run_steps(wf):
        actual = condition_class(step.condition)
        for command in step.run_commands:
            phases = index.get(command.normalized)
            if not phases:
                continue
            expected = {_expected_class(p) for p in phases}
            if len(expected) != 1 or actual in expected:
                continue
            (want,) = expected
            if want == "success":
                message = f"extra condition if: {step.condition} on a step the source runs unconditionally"
            else:
                phase = sorted(phases)[0]
                message = f"{phase} command should run under {PHASE_CONDITIONS[phase]}, not {step.condition or 'the default'}"
            out.append(make_issue("condition_misconfig", f"jobs.{job_id}.steps[{i}]",
                                  lines.step(job_id, i, "if" if step.condition else "run"), message, command.text))
            break
    return out


def _covered_by_action(command: str, uses: set[str]) -> bool:
    words = command.split()
    for tool, actions in ACTION_EQUIVALENTS.items():
        if not uses & set(actions):
            continue
        if tool in invoked_tools(command):
            return True
        if "install" in words and tool in words[words.index("install") + 1:]:
            return True
    return False


def _missing_tasks(source: TravisConfig, index, wf: Workflow, lines: _Lines) -> list[Issue]:
    present = {c.normalized for _, _, step in _run_steps(wf) for c in step.run_commands}
    uses = _uses_names(wf)
    out = []
    seen = set()
    for command in source.all_commands():
        norm = command.normalized
        if norm in seen or norm in present or _covered_by_action(norm, uses):
            continue
        seen.add(norm)
        out.append(make_issue("missing_task", "jobs", lines.root("jobs"),
                              f"source command {norm!r} is not run by the workflow", norm))
    return out


def _redundant_tasks(index, wf: Workflow, lines: _Lines, table) -> list[Issue]:
    out = []
    for job_id, i, step in _run_steps(wf):
        for command in step.run_commands:
            if command.normalized in index:
                continue
            if any(installs(command.text, spec) for spec in table.values()):
                continue
            out.append(make_issue("redundant_task", f"jobs.{job_id}.steps[{i}].run", lines.step(job_id, i),
                                  f"command {command.normalized!r} does not come from the source", command.text))
    return out


__all__ = ["detect_logic", "source_command_phases", "condition_class", "ACTION_EQUIVALENTS"]
