"""Platform discrepancy detectors: Travis idioms that GitHub Actions rejects."""
from __future__ import annotations

import re
from typing import Any, Optional

from ..model import TRAILING_ZERO_RE, VERSION_KEYS
from ..transpiler import LANGUAGE_SETUP, installs, uses_tool
from .issues import Issue, LintContext, make_issue
from .walk import jobs, line_at, run_lines, steps, text_line, uses_name

SUPPORTED_ARCH = {"x64", "arm64"}
ARCH_KEYS = {"arch", "architecture"}
# Travis architecture names that sometimes leak into runner labels.
TRAVIS_ARCH_NAMES = {"amd64", "ppc64le", "s390x", "arm64-graviton2"}

VERSION_POSITION_KEYS = set(VERSION_KEYS) | set(VERSION_KEYS.values()) | {"node", "java"}
AXIS_TO_SETUP = {axis: purpose for purpose, axis in LANGUAGE_SETUP.values()}

_ASSIGNMENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*=")


def _is_expression(value: Any) -> bool:
    return isinstance(value, str) and "${{" in value


def _deny(ctx: LintContext, level: str) -> frozenset:
    return ctx.denylist.get(level, frozenset())


class _Platform:
    def __init__(self, text: str, tree: Any, ctx: LintContext):
        self.text = text
        self.tree = tree
        self.ctx = ctx
        self.issues: list[Issue] = []

    def add(self, issue_type, path, line, message, evidence=None):
        if evidence is None:
            evidence = text_line(self.text, line)
        self.issues.append(make_issue(issue_type, path, line, message, evidence))

    # unsupported_key ------------------------------------------------------

    def check_keys(self, body: dict, level: str, path: str):
        deny = _deny(self.ctx, level)
        for key in body:
            if key in deny:
                self.add("unsupported_key", f"{path}.{key}" if path else key, line_at(None, body, key),
                         f"{key!r} is Travis CI vocabulary with no meaning at {level} level")

    def unsupported_keys(self):
        self.check_keys(self.tree, "workflow", "")
        for job_id, job in jobs(self.tree):
            path = f"jobs.{job_id}"
            self.check_keys(job, "job", path)
            strategy = job.get("strategy")
            if isinstance(strategy, dict):
                self.check_keys(strategy, "strategy", f"{path}.strategy")
                if isinstance(strategy.get("matrix"), dict):
                    self.check_keys(strategy["matrix"], "matrix", f"{path}.strategy.matrix")
            for i, step in steps(job):
                self.check_keys(step, "step", f"{path}.steps[{i}]")

    # unsupported_expression ------------------------------------------------

    def check_env(self, value: Any, container: Any, key: Any, path: str):
        items = value if isinstance(value, list) else [value]
        if isinstance(value, dict) or value is None:
            return
        for i, item in enumerate(items):
            if isinstance(item, str) and any(_ASSIGNMENT.match(tok) for tok in str(item).split()):
                sub = f"{path}[{i}]" if isinstance(value, list) else path
                self.add("unsupported_expression", sub, line_at(item, container, key),
                         f"environment given as assignment string {str(item)!r}; use a NAME: value mapping")

    def unsupported_expressions(self):
        if "env" in self.tree:
            self.check_env(self.tree["env"], self.tree, "env", "env")
        for job_id, job in jobs(self.tree):
            path = f"jobs.{job_id}"
            if "env" in job:
                self.check_env(job["env"], job, "env", f"{path}.env")
            matrix = (job.get("strategy") or {}).get("matrix") if isinstance(job.get("strategy"), dict) else None
            if isinstance(matrix, dict) and "env" in matrix:
                self.check_env(matrix["env"], matrix, "env", f"{path}.strategy.matrix.env")
            for i, step in steps(job):
                if "env" in step:
                    self.check_env(step["env"], step, "env", f"{path}.steps[{i}].env")

    # unsupported_architecture ---------------------------------------------

    def check_arch_value(self, value, container, key, path):
        for i, item in enumerate(value if isinstance(value, list) else [value]):
            if item is None or _is_expression(item) or isinstance(item, (dict, list)):
                continue
            if str(item) not in SUPPORTED_ARCH:
                self.add("unsupported_architecture", path, line_at(item, container, key),
                         f"architecture {str(item)!r} is not available; use x64 or arm64")

    def unsupported_architectures(self):
        for job_id, job in jobs(self.tree):
            path = f"jobs.{job_id}"
            strategy = job.get("strategy")
            matrix = strategy.get("matrix") if isinstance(strategy, dict) else None
            if isinstance(matrix, dict):
                for key, value in matrix.items():
                    if key in ARCH_KEYS:
                        self.check_arch_value(value, matrix, key, f"{path}.strategy.matrix.{key}")
                    elif key in ("include", "exclude") and isinstance(value, list):
                        for n, entry in enumerate(value):
                            if not isinstance(entry, dict):
                                continue
                            for k in ARCH_KEYS & set(entry):
                                self.check_arch_value(entry[k], entry, k,
                                                      f"{path}.strategy.matrix.{key}[{n}].{k}")
            runs_on = job.get("runs-on")
            for label in runs_on if isinstance(runs_on, list) else [runs_on]:
                if isinstance(label, str) and str(label) in TRAVIS_ARCH_NAMES:
                    self.add("unsupported_architecture", f"{path}.runs-on", line_at(label, job, "runs-on"),
                             f"runner label {str(label)!r} names an architecture with no hosted runner")
            for i, step in steps(job):
                with_args = step.get("with")
                if isinstance(with_args, dict):
                    for k in ARCH_KEYS & set(with_args):
                        self.check_arch_value(with_args[k], with_args, k, f"{path}.steps[{i}].with.{k}")

    # trailing_zero ----------------------------------------------------------

    def trailing_zeros(self):
        def visit(value, container, key, path, versioned):
            if isinstance(value, dict):
                for k, v in value.items():
                    name = str(k).lower()
                    hit = "version" in name or name in VERSION_POSITION_KEYS
                    visit(v, value, k, f"{path}.{k}" if path else str(k), hit)
            elif isinstance(value, list):
                for i, v in enumerate(value):
                    visit(v, value, i, f"{path}[{i}]", versioned)
            elif versioned and isinstance(value, str) and getattr(value, "plain", False):
                if TRAILING_ZERO_RE.match(str(value)):
                    self.add("trailing_zero", path, line_at(value, container, key),
                             f"unquoted {str(value)} is read as the number {float(str(value))!r}; quote it")

        visit(self.tree, None, None, "", False)

    # unspecified_default ----------------------------------------------------

    def unspecified_defaults(self):
        registry = self.ctx.action_registry
        checkout = registry.get("checkout")
        checkout_name = checkout.name if checkout else "actions/checkout"
        for job_id, job in jobs(self.tree):
            path = f"jobs.{job_id}"
            names = [uses_name(s) for _, s in steps(job)]
            has_run = any(run_lines(s) for _, s in steps(job))
            if has_run and checkout_name not in names:
                self.add("unspecified_default", f"{path}.steps", line_at(None, job, "steps"),
                         "job runs commands but never checks out the repository")
            strategy = job.get("strategy")
            matrix = strategy.get("matrix") if isinstance(strategy, dict) else None
            if not isinstance(matrix, dict):
                continue
            axis_names = set(matrix)
            for entry in matrix.get("include") or []:
                if isinstance(entry, dict):
                    axis_names |= set(entry)
            for axis in sorted(axis_names & set(AXIS_TO_SETUP)):
                ref = registry.get(AXIS_TO_SETUP[axis])
                if ref is not None and ref.name not in names:
                    self.add("unspecified_default", f"{path}.strategy.matrix.{axis}",
                             line_at(None, matrix, axis),
                             f"matrix axis {axis!r} is never passed to {ref.name}; the runner default is used")

    # missing_package --------------------------------------------------------

    def missing_packages(self):
        for job_id, job in jobs(self.tree):
            path = f"jobs.{job_id}"
            for spec in self.ctx.package_table.values():
                installed = False
                for i, step in steps(job):
                    hit = None
                    for cmd in run_lines(step):
                        if installs(cmd, spec):
                            installed = True
                            break
                        if uses_tool(cmd, spec):
                            hit = cmd
                            break
                    if installed:
                        break
                    if hit is not None:
                        self.add("missing_package", f"{path}.steps[{i}].run", line_at(step.get("run"), step, "run"),
                                 f"{spec.tool} is not preinstalled; add {spec.install!r} before this step",
                                 hit)
                        break


def detect_platform(candidate, candidate_text: str, ctx: LintContext, tree: Optional[Any] = None) -> list[Issue]:
    """Platform discrepancies in ``candidate_text``.

    ``candidate`` (the parsed Workflow) is accepted for interface symmetry;
    the rules read the loaded tree because they need source lines and
    quoting style.
    """
    if tree is None:
        from ..frontend.loader import load
        tree = load(candidate_text)
    if not isinstance(tree, dict):
        return []
    checker = _Platform(candidate_text, tree, ctx)
    checker.unsupported_keys()
    checker.unsupported_expressions()
    checker.unsupported_architectures()
    checker.trailing_zeros()
    checker.unspecified_defaults()
    checker.missing_packages()
    return checker.issues
