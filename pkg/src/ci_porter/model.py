"""Typed representations of Travis CI configurations and GitHub Actions workflows.

Every type here is a frozen dataclass; transformations build new instances
with :func:`dataclasses.replace` instead of mutating.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence, Union

TRAILING_ZERO_RE = re.compile(r"^\d+\.\d*0$")

# Lifecycle order used when emitting steps.
PHASES = (
    "before_install",
    "install",
    "before_script",
    "script",
    "after_success",
    "after_failure",
    "before_deploy",
    "deploy",
    "after_script",
)

# Travis language -> key holding its version axis.
VERSION_KEYS = {
    "python": "python",
    "node_js": "node_js",
    "ruby": "rvm",
    "java": "jdk",
    "go": "go",
    "php": "php",
    "rust": "rust",
    "scala": "scala",
    "julia": "julia",
    "r": "r",
    "elixir": "elixir",
    "dart": "dart",
    "haskell": "ghc",
    "perl": "perl",
}


class BlankCommand(ValueError):
    """Raised when a command line is empty after trimming."""


@dataclass(frozen=True)
class VersionLiteral:
    """A version scalar exactly as it was spelled in the source document.

    Equality only looks at ``raw_text``: the quoting flag records how the
    scalar was written, not what it means.
    """

    raw_text: str
    quoted: bool = field(default=False, compare=False)
    line: Optional[int] = field(default=None, compare=False, repr=False)
    column: Optional[int] = field(default=None, compare=False, repr=False)

    @property
    def trailing_zero_hazard(self) -> bool:
        return not self.quoted and bool(TRAILING_ZERO_RE.match(self.raw_text))

    def __str__(self) -> str:
        return self.raw_text


@dataclass(frozen=True)
class Command:
    text: str
    normalized: str


def normalize_command(raw: str) -> Command:
    """Collapse internal whitespace runs and trim.

    >>> normalize_command("  python -m   pytest ").normalized
    'python -m pytest'
    """
    normalized = " ".join(raw.split())
    if not normalized:
        raise BlankCommand("blank command")
    return Command(text=raw.strip(), normalized=normalized)


def split_commands(block: str) -> tuple[Command, ...]:
    """Split a multi-line shell block into commands, skipping blank lines."""
    commands = []
    for line in str(block).splitlines():
        try:
            commands.append(normalize_command(line))
        except BlankCommand:
            continue
    return tuple(commands)


@dataclass(frozen=True)
class EnvEntry:
    name: str
    value: str
    origin_form: str = "key_value"  # or "assignment_string"

    def __post_init__(self):
        if not self.name or "=" in self.name:
            raise ValueError(f"invalid environment variable name: {self.name!r}")


@dataclass(frozen=True)
class CacheSpec:
    managers: tuple[str, ...] = ()
    directories: tuple[str, ...] = ()


@dataclass(frozen=True)
class BranchFilter:
    include: tuple[str, ...] = ()
    exclude: tuple[str, ...] = ()


@dataclass(frozen=True)
class TravisJob:
    """One entry of ``jobs.include`` (or ``matrix.include``)."""

    stage: str
    name: Optional[str] = None
    phases: Mapping[str, tuple[Command, ...]] = field(default_factory=dict)
    versions: tuple[VersionLiteral, ...] = ()
    env: tuple[EnvEntry, ...] = ()
    os: Optional[str] = None
    arch: Optional[str] = None
    extras: Mapping[str, Any] = field(default_factory=dict)
    index: int = 0

    @property
    def defines_phases(self) -> bool:
        return bool(self.phases)


@dataclass(frozen=True)
class StageDef:
    name: str
    jobs: tuple[TravisJob, ...] = ()


@dataclass(frozen=True)
class MatrixExtras:
    include: tuple[TravisJob, ...] = ()
    exclude: tuple[Mapping[str, Any], ...] = ()
    allow_failures: tuple[Mapping[str, Any], ...] = ()
    fast_finish: Optional[bool] = None


@dataclass(frozen=True)
class TravisConfig:
    language: str = ""
    versions: tuple[VersionLiteral, ...] = ()
    os_list: tuple[str, ...] = ()
    arch_list: tuple[str, ...] = ()
    global_env: tuple[EnvEntry, ...] = ()
    env_matrix: tuple[tuple[EnvEntry, ...], ...] = ()
    phases: Mapping[str, tuple[Command, ...]] = field(default_factory=dict)
    stages: tuple[StageDef, ...] = ()
    cache: Optional[CacheSpec] = None
    notifications: Any = None
    branch_filter: Optional[BranchFilter] = None
    matrix_extras: MatrixExtras = field(default_factory=MatrixExtras)
    raw_extras: Mapping[str, Any] = field(default_factory=dict)
    # Top-level keys in source order, and the subset claimed by named fields.
    source_keys: tuple[str, ...] = ()
    named_keys: tuple[str, ...] = ()

    @property
    def version_key(self) -> Optional[str]:
        return VERSION_KEYS.get(self.language)

    def all_commands(self) -> list[Command]:
        """Every phase command of the top level and of every stage job."""
        out = [c for cmds in self.phases.values() for c in cmds]
        for stage in self.stages:
            for job in stage.jobs:
                out.extend(c for cmds in job.phases.values() for c in cmds)
        for job in self.matrix_extras.include:
            out.extend(c for cmds in job.phases.values() for c in cmds)
        return out


def version_axis_values(config: TravisConfig) -> tuple[VersionLiteral, ...]:
    """The version axis for ``config.language`` in source order."""
    return tuple(config.versions)


# --- GitHub Actions side ---------------------------------------------------


@dataclass(frozen=True)
class ActionRef:
    """``owner/repo[/path]@version`` (local and docker refs keep ``version=None``)."""

    name: str
    version: Optional[str] = None

    @classmethod
    def parse(cls, text: str) -> "ActionRef":
        text = str(text).strip()
        if "@" in text and not text.startswith(("./", "docker://")):
            name, _, version = text.rpartition("@")
            return cls(name, version)
        return cls(text, None)

    def __str__(self) -> str:
        return f"{self.name}@{self.version}" if self.version else self.name


@dataclass(frozen=True)
class Step:
    kind: Optional[str]  # "uses" | "run"; None only for malformed candidates
    name: Optional[str] = None
    uses_ref: Optional[ActionRef] = None
    run_commands: tuple[Command, ...] = ()
    with_args: Mapping[str, Any] = field(default_factory=dict)
    env: Mapping[str, Any] = field(default_factory=dict)
    condition: Optional[str] = None
    extras: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def uses(cls, ref: Union[str, ActionRef], with_args=None, name=None, condition=None) -> "Step":
        if isinstance(ref, str):
            ref = ActionRef.parse(ref)
        return cls(kind="uses", name=name, uses_ref=ref, with_args=dict(with_args or {}), condition=condition)

    @classmethod
    def run(cls, command: Union[str, Command, Sequence[Command]], name=None, condition=None, env=None) -> "Step":
        if isinstance(command, str):
            commands = split_commands(command)
        elif isinstance(command, Command):
            commands = (command,)
        else:
            commands = tuple(command)
        return cls(kind="run", name=name, run_commands=commands, condition=condition, env=dict(env or {}))

    @property
    def run_text(self) -> Optional[str]:
        if self.kind != "run":
            return None
        return "\n".join(c.text for c in self.run_commands)


@dataclass(frozen=True)
class Matrix:
    axes: Mapping[str, tuple[Any, ...]] = field(default_factory=dict)
    include: tuple[Mapping[str, Any], ...] = ()
    exclude: tuple[Mapping[str, Any], ...] = ()
    fail_fast: Optional[bool] = None
    expression: Optional[str] = None  # matrix given as a single ${{ }} expression

    @property
    def empty(self) -> bool:
        return not (self.axes or self.include or self.exclude or self.expression)

    def defined_names(self) -> set[str]:
        names = set(self.axes)
        for entry in self.include:
            names.update(entry)
        return names


@dataclass(frozen=True)
class Job:
    runs_on: Any = "ubuntu-latest"
    needs: tuple[str, ...] = ()
    strategy_matrix: Optional[Matrix] = None
    env: Mapping[str, Any] = field(default_factory=dict)
    steps: tuple[Step, ...] = ()
    strategy_extras: Mapping[str, Any] = field(default_factory=dict)
    extras: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class EventFilter:
    branches: Optional[tuple[str, ...]] = None
    branches_ignore: Optional[tuple[str, ...]] = None
    tags: Optional[tuple[str, ...]] = None
    tags_ignore: Optional[tuple[str, ...]] = None
    paths: Optional[tuple[str, ...]] = None
    paths_ignore: Optional[tuple[str, ...]] = None
    extras: Mapping[str, Any] = field(default_factory=dict)
    raw: Any = None  # non-mapping payloads such as a schedule list


FILTER_KEYS = {
    "branches": "branches",
    "branches-ignore": "branches_ignore",
    "tags": "tags",
    "tags-ignore": "tags_ignore",
    "paths": "paths",
    "paths-ignore": "paths_ignore",
}


@dataclass(frozen=True)
class Workflow:
    name: Optional[str] = None
    triggers: Mapping[str, Optional[EventFilter]] = field(default_factory=dict)
    jobs: Mapping[str, Job] = field(default_factory=dict)
    extras: Mapping[str, Any] = field(default_factory=dict)


MATRIX_REF_RE = re.compile(r"\$\{\{[^}]*?\bmatrix\.([A-Za-z_][A-Za-z0-9_-]*)")


def matrix_references(value: Any) -> set[str]:
    """Axis names referenced as ``${{ matrix.X }}`` anywhere inside ``value``."""
    found: set[str] = set()
    if isinstance(value, str):
        found.update(MATRIX_REF_RE.findall(value))
    elif isinstance(value, Mapping):
        for k, v in value.items():
            found |= matrix_references(k)
            found |= matrix_references(v)
    elif isinstance(value, (list, tuple)):
        for item in value:
            found |= matrix_references(item)
    elif isinstance(value, Command):
        found |= matrix_references(value.text)
    elif isinstance(value, Step):
        found |= matrix_references(
            [value.name, str(value.uses_ref or ""), list(value.run_commands),
             value.with_args, value.env, value.condition, value.extras]
        )
    return found


def job_matrix_references(job: Job) -> set[str]:
    refs = matrix_references([job.runs_on, job.env, job.extras])
    for step in job.steps:
        refs |= matrix_references(step)
    return refs


def workflow_violations(wf: Workflow) -> list[str]:
    """Human-readable list of Workflow/Job/Step invariant violations."""
    problems = []
    if not wf.triggers:
        problems.append("workflow declares no trigger events")
    if not wf.jobs:
        problems.append("workflow declares no jobs")
    for job_id, job in wf.jobs.items():
        for dep in job.needs:
            if dep not in wf.jobs:
                problems.append(f"job {job_id!r} needs unknown job {dep!r}")
        if not job.steps and "uses" not in job.extras:
            problems.append(f"job {job_id!r} has no steps")
        defined = job.strategy_matrix.defined_names() if job.strategy_matrix else set()
        if job.strategy_matrix and job.strategy_matrix.expression:
            continue
        for ref in sorted(job_matrix_references(job) - defined):
            problems.append(f"job {job_id!r} references undefined matrix axis {ref!r}")
        for i, step in enumerate(job.steps):
            if step.kind == "uses" and step.uses_ref is not None and not step.run_commands:
                continue
            if step.kind == "run" and step.uses_ref is None and step.run_commands:
                continue
            problems.append(f"job {job_id!r} step {i} must have exactly one of uses/run")
    return problems
