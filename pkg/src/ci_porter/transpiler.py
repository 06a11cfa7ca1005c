"""Rule-based Travis CI -> GitHub Actions translation.

The pipeline is: triggers from branch filters, one job per stage wired with
``needs``, a strategy matrix from the version/os/arch/env axes, one run step
per phase command, then :func:`materialize_defaults` (checkout, setup, cache)
and :func:`inject_known_packages`.  Anything from the source that has no
target equivalent is reported as a :class:`TranspileWarning`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional, Sequence

from .model import (
    PHASES,
    ActionRef,
    Command,
    EnvEntry,
    EventFilter,
    Job,
    Matrix,
    Step,
    TravisConfig,
    TravisJob,
    VersionLiteral,
    Workflow,
)
from .registry import ActionRegistry, CredentialSpec, PackageSpec, load_credentials, load_package_table

DROPPED_NOTIFICATIONS = "dropped_notifications"
DROPPED_UNKNOWN_KEY = "dropped_unknown_key"
SKIPPED_ARCH = "skipped_arch"
IMPLICIT_DEFAULT_ADDED = "implicit_default_added"
PACKAGE_INJECTED = "package_injected"
WARNING_CODES = (DROPPED_NOTIFICATIONS, DROPPED_UNKNOWN_KEY, SKIPPED_ARCH,
                 IMPLICIT_DEFAULT_ADDED, PACKAGE_INJECTED)

# language -> (registry purpose of its setup action, version input of that action)
LANGUAGE_SETUP = {
    "python": ("setup-python", "python-version"),
    "node_js": ("setup-node", "node-version"),
    "ruby": ("setup-ruby", "ruby-version"),
    "java": ("setup-java", "java-version"),
    "go": ("setup-go", "go-version"),
}
SETUP_EXTRA_INPUTS = {"setup-java": {"distribution": "temurin"}}

OS_RUNNERS = {"linux": "ubuntu-latest", "osx": "macos-latest", "windows": "windows-latest"}
ARCH_MAP = {"amd64": "x64", "x64": "x64", "arm64": "arm64", "arm64-graviton2": "arm64"}
SUPPORTED_ARCH = ("x64", "arm64")

# Travis fast_finish=true means "report as soon as the required jobs are
# decided", i.e. do not wait on the rest; the GitHub flag with the closest
# behaviour is fail-fast, whose polarity is opposite, so the value is inverted.
FAST_FINISH_TO_FAIL_FAST = {True: False, False: True}

PHASE_CONDITIONS = {
    "after_success": "success()",
    "after_failure": "failure()",
    "after_script": "always()",
}

CACHE_PATHS = {
    "pip": ["~/.cache/pip"],
    "npm": ["~/.npm"],
    "yarn": ["~/.cache/yarn"],
    "bundler": ["vendor/bundle"],
    "cargo": ["~/.cargo/registry", "~/.cargo/git"],
    "ccache": ["~/.ccache"],
    "packages": ["~/R/Library"],
}

DEFAULT_STAGE = "test"


class TranspileError(ValueError):
    pass


@dataclass(frozen=True)
class TranspileWarning:
    code: str
    detail: str
    source_path: str = ""

    def __str__(self) -> str:
        where = f" [{self.source_path}]" if self.source_path else ""
        return f"{self.code}: {self.detail}{where}"


@dataclass(frozen=True)
class TranspileOptions:
    default_runner: str = "ubuntu-latest"
    default_triggers: tuple[str, ...] = ("push", "pull_request")
    action_registry: ActionRegistry = field(default_factory=ActionRegistry.load)
    strict_arch: bool = False
    package_table: Mapping[str, PackageSpec] = field(default_factory=load_package_table)
    credentials: Mapping[str, CredentialSpec] = field(default_factory=load_credentials)
    workflow_name: Optional[str] = "CI"

    def __post_init__(self):
        if not self.default_triggers:
            raise ValueError("default_triggers must not be empty")


def setup_for(language: str) -> Optional[tuple[str, str]]:
    return LANGUAGE_SETUP.get(language)


def version_axis_name(language: str) -> str:
    setup = setup_for(language)
    return setup[1] if setup else f"{language}-version"


def slug(name: str) -> str:
    """Job id from a stage name: lower case, runs of other characters -> '-'."""
    text = re.sub(r"[^a-z0-9_-]+", "-", str(name).strip().lower()).strip("-")
    if not text or not (text[0].isalpha() or text[0] == "_"):
        text = "stage-" + text if text else "stage"
    return text


# --- env -------------------------------------------------------------------


def map_env(entries: Sequence[EnvEntry], warnings: Optional[list] = None,
            path: str = "env") -> dict[str, str]:
    """Key-value env mapping; duplicate names keep the last value."""
    out: dict[str, str] = {}
    for entry in entries:
        if entry.name in out and warnings is not None:
            warnings.append(TranspileWarning(
                DROPPED_UNKNOWN_KEY,
                f"duplicate env variable {entry.name}; value {out[entry.name]!r} replaced by {entry.value!r}",
                f"{path}.{entry.name}",
            ))
        out.pop(entry.name, None)
        out[entry.name] = entry.value
    return out


# --- matrix ----------------------------------------------------------------


def _runner(os_name: str, warnings: list, path: str) -> str:
    if os_name in OS_RUNNERS:
        return OS_RUNNERS[os_name]
    warnings.append(TranspileWarning(
        DROPPED_UNKNOWN_KEY, f"no runner mapping for os {os_name!r}; label passed through", path))
    return os_name


def _arches(values: Sequence[str], opts: TranspileOptions, warnings: list, path: str) -> list[str]:
    out: list[str] = []
    for value in values:
        mapped = ARCH_MAP.get(value)
        if mapped is None:
            if opts.strict_arch:
                raise TranspileError(f"unsupported architecture {value!r}")
            warnings.append(TranspileWarning(SKIPPED_ARCH, f"architecture {value!r} has no hosted runner", path))
        elif mapped not in out:
            out.append(mapped)
    return out


def _java_version(literal: VersionLiteral) -> VersionLiteral:
    m = re.match(r"^(?:open|oracle)jdk(\d+)$", literal.raw_text)
    return VersionLiteral(m.group(1), literal.quoted) if m else literal


def _versions(config: TravisConfig, values) -> tuple[VersionLiteral, ...]:
    if config.language == "java":
        return tuple(_java_version(v) for v in values)
    return tuple(values)


def _include_entry(job: TravisJob, config: TravisConfig, opts, warnings, path) -> dict:
    entry: dict[str, Any] = {}
    versions = _versions(config, job.versions)
    if versions:
        entry[version_axis_name(config.language)] = str(versions[0])
        for extra in versions[1:]:
            warnings.append(TranspileWarning(
                DROPPED_UNKNOWN_KEY, f"include entry lists several versions; kept {versions[0]}, dropped {extra}",
                f"{path}.{config.version_key}"))
    if job.os:
        entry["os"] = _runner(job.os, warnings, f"{path}.os")
    if job.arch:
        arches = _arches([job.arch], opts, warnings, f"{path}.arch")
        if arches:
            entry["arch"] = arches[0]
    if job.env:
        entry["env"] = map_env(job.env, warnings, f"{path}.env")
    for phase in job.phases:
        warnings.append(TranspileWarning(
            DROPPED_UNKNOWN_KEY, f"per-entry {phase} commands cannot be expressed in a matrix include",
            f"{path}.{phase}"))
    for key in job.extras:
        warnings.append(TranspileWarning(DROPPED_UNKNOWN_KEY, f"matrix entry key {key!r} dropped", f"{path}.{key}"))
    if job.name:
        entry["name"] = job.name
    return entry


def _exclude_entry(raw: Mapping, config: TravisConfig, opts, warnings, path) -> dict:
    from .frontend.travis import parse_assignments

    entry: dict[str, Any] = {}
    for key, value in raw.items():
        if key == config.version_key:
            entry[version_axis_name(config.language)] = str(value)
        elif key == "os":
            entry["os"] = _runner(str(value), warnings, f"{path}.os")
        elif key == "arch":
            arches = _arches([str(value)], opts, warnings, f"{path}.arch")
            if arches:
                entry["arch"] = arches[0]
        elif key == "env":
            if isinstance(value, Mapping):
                entry["env"] = {str(k): str(v) for k, v in value.items()}
            else:
                entry["env"] = map_env(parse_assignments(str(value)))
        else:
            warnings.append(TranspileWarning(DROPPED_UNKNOWN_KEY, f"exclude key {key!r} dropped", f"{path}.{key}"))
    return entry


def map_matrix(config: TravisConfig, opts: Optional[TranspileOptions] = None,
               warnings: Optional[list] = None) -> Matrix:
    """Strategy matrix of the main (unstaged or test-stage) job."""
    opts = opts or TranspileOptions()
    warnings = warnings if warnings is not None else []
    axes: dict[str, tuple] = {}
    versions = _versions(config, config.versions)
    if versions:
        axes[version_axis_name(config.language)] = versions
    if len(config.os_list) > 1:
        axes["os"] = tuple(_runner(o, warnings, "os") for o in config.os_list)
    if config.arch_list:
        arches = _arches(config.arch_list, opts, warnings, "arch")
        if arches:
            axes["arch"] = tuple(arches)
    if config.env_matrix:
        axes["env"] = tuple(map_env(row, warnings, "env.jobs") for row in config.env_matrix)

    extras = config.matrix_extras
    include = tuple(
        _include_entry(job, config, opts, warnings, f"jobs.include[{job.index}]") for job in extras.include
    )
    exclude = tuple(
        e for e in (
            _exclude_entry(raw, config, opts, warnings, f"jobs.exclude[{i}]")
            for i, raw in enumerate(extras.exclude)
        ) if e
    )
    for i, _ in enumerate(extras.allow_failures):
        warnings.append(TranspileWarning(
            DROPPED_UNKNOWN_KEY, "allow_failures has no direct equivalent; entry dropped",
            f"jobs.allow_failures[{i}]"))

    fail_fast = None
    matrix = Matrix(axes=axes, include=include, exclude=exclude)
    if extras.fast_finish is not None:
        if matrix.empty:
            warnings.append(TranspileWarning(
                DROPPED_UNKNOWN_KEY, "fast_finish dropped: the job has no matrix", "jobs.fast_finish"))
        else:
            fail_fast = FAST_FINISH_TO_FAIL_FAST[extras.fast_finish]
    return replace(matrix, fail_fast=fail_fast)


# --- stages ----------------------------------------------------------------


def map_stages(config: TravisConfig) -> list[tuple[str, tuple[str, ...]]]:
    """(job id, needs) per stage; each stage needs the whole previous stage."""
    if not config.stages:
        return [("build", ())]
    names = [s.name for s in config.stages]
    if len(set(names)) != len(names):
        raise TranspileError(f"duplicate stage names in {names}")
    out: list[tuple[str, tuple[str, ...]]] = []
    used: set[str] = set()
    previous: tuple[str, ...] = ()
    for name in names:
        job_id = base = slug(name)
        n = 2
        while job_id in used:
            job_id, n = f"{base}-{n}", n + 1
        used.add(job_id)
        out.append((job_id, previous))
        previous = (job_id,)
    return out


# --- steps -----------------------------------------------------------------


def _phase_steps(phases: Mapping[str, Sequence[Command]]) -> list[Step]:
    steps = []
    for phase in PHASES:
        for command in phases.get(phase, ()):
            steps.append(Step.run(command, condition=PHASE_CONDITIONS.get(phase)))
    return steps


def _effective_phases(config: TravisConfig, job: Optional[TravisJob]) -> dict:
    phases = dict(config.phases)
    if job is not None:
        phases.update(job.phases)
    return phases


def _stage_phases(config: TravisConfig, jobs: Sequence[TravisJob]) -> dict:
    """Per phase, the distinct effective command sequences of the stage's entries."""
    if not jobs:
        return dict(config.phases)
    merged: dict[str, list[Command]] = {}
    for phase in PHASES:
        seen: list[tuple] = []
        for job in jobs:
            seq = tuple(_effective_phases(config, job).get(phase, ()))
            if seq and seq not in seen:
                seen.append(seq)
        if seen:
            merged[phase] = [c for seq in seen for c in seq]
    return merged


def _setup_step(config: TravisConfig, opts: TranspileOptions, version: Any,
                arch: Any = None) -> Optional[Step]:
    setup = setup_for(config.language)
    if setup is None:
        return None
    ref = opts.action_registry.get(setup[0])
    if ref is None:
        return None
    with_args: dict[str, Any] = dict(SETUP_EXTRA_INPUTS.get(setup[0], {}))
    with_args[setup[1]] = version
    if arch is not None:
        with_args["architecture"] = arch
    return Step.uses(ref, with_args)


def _is_action(step: Step, ref: Optional[ActionRef]) -> bool:
    return ref is not None and step.kind == "uses" and step.uses_ref is not None and step.uses_ref.name == ref.name


# --- defaults --------------------------------------------------------------


def _cache_step(config: TravisConfig, opts: TranspileOptions) -> Optional[Step]:
    ref = opts.action_registry.get("cache")
    if config.cache is None or ref is None:
        return None
    paths: list[str] = []
    for manager in config.cache.managers:
        paths.extend(p for p in CACHE_PATHS.get(manager, ()) if p not in paths)
    paths.extend(d for d in config.cache.directories if d not in paths)
    if not paths:
        return None
    label = "-".join(config.cache.managers) or "deps"
    return Step.uses(ref, {
        "path": paths[0] if len(paths) == 1 else "\n".join(paths) + "\n",
        "key": "${{ runner.os }}-" + label + "-${{ hashFiles('**/*.lock', '**/requirements*.txt') }}",
        "restore-keys": "${{ runner.os }}-" + label + "-",
    })


def materialize_defaults(wf: Workflow, config: TravisConfig,
                         opts: Optional[TranspileOptions] = None) -> tuple[Workflow, list[TranspileWarning]]:
    """Checkout first, setup bound to the version axis second, cache before
    the first phase command.  Applying it twice is the same as once."""
    opts = opts or TranspileOptions()
    registry = opts.action_registry
    checkout = registry.get("checkout")
    setup = setup_for(config.language)
    setup_ref = registry.get(setup[0]) if setup else None
    cache_ref = registry.get("cache")
    warnings: list[TranspileWarning] = []
    jobs = {}
    for job_id, job in wf.jobs.items():
        steps = list(job.steps)
        if checkout is not None:
            existing = [s for s in steps if _is_action(s, checkout)]
            steps = [s for s in steps if not _is_action(s, checkout)]
            steps.insert(0, existing[0] if existing else Step.uses(checkout))
        matrix = job.strategy_matrix
        axis = version_axis_name(config.language)
        if setup_ref is not None and not any(_is_action(s, setup_ref) for s in steps):
            if matrix is not None and axis in matrix.defined_names():
                arch = "${{ matrix.arch }}" if "arch" in matrix.defined_names() else None
                steps.insert(1 if checkout is not None else 0, _setup_step(config, opts, "${{ matrix.%s }}" % axis, arch))
        cache_step = _cache_step(config, opts)
        if cache_step is not None and not any(_is_action(s, cache_ref) for s in steps):
            at = 0
            while at < len(steps) and steps[at].kind == "uses":
                at += 1
            steps.insert(at, cache_step)
            warnings.append(TranspileWarning(
                IMPLICIT_DEFAULT_ADDED, f"cache step added for {', '.join(config.cache.managers) or 'directories'}",
                f"jobs.{job_id}"))
        jobs[job_id] = replace(job, steps=tuple(steps))
    return replace(wf, jobs=jobs), warnings


# --- packages --------------------------------------------------------------

_ASSIGNMENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*=")


def invoked_tools(command: str) -> set[str]:
    """Program names a shell line runs: first word of each ``&&``/``;``/``|``
    segment, plus ``python -m X`` modules."""
    tools: set[str] = set()
    for segment in re.split(r"&&|\|\||;|\|", command):
        words = segment.split()
        while words and (_ASSIGNMENT.match(words[0]) or words[0] in ("sudo", "exec", "time")):
            words = words[1:]
        if not words:
            continue
        tools.add(words[0].rsplit("/", 1)[-1])
        if re.match(r"^python[0-9.]*$", words[0]) and len(words) > 2 and words[1] == "-m":
            tools.add(words[2])
    return tools


def installs(command: str, spec: PackageSpec) -> bool:
    """Does ``command`` install the tool described by ``spec``?"""
    normalized = " ".join(command.split())
    if normalized == " ".join(spec.install.split()):
        return True
    words = normalized.split()
    if "install" not in words:
        return False
    after = words[words.index("install") + 1:]
    return any(re.split(r"[=<>~!\[]", w)[0] == spec.tool for w in after)


def uses_tool(command: str, spec: PackageSpec) -> bool:
    tools = invoked_tools(command)
    return spec.tool in tools or any(exe in tools for exe in spec.executables)


def inject_known_packages(wf: Workflow, config: Optional[TravisConfig],
                          table: Mapping[str, PackageSpec]) -> tuple[Workflow, list[TranspileWarning]]:
    warnings: list[TranspileWarning] = []
    jobs = {}
    for job_id, job in wf.jobs.items():
        steps = list(job.steps)
        for spec in table.values():
            first_use = None
            installed = False
            for i, step in enumerate(steps):
                texts = [c.text for c in step.run_commands] if step.kind == "run" else []
                if any(installs(t, spec) for t in texts):
                    installed = True
                    break
                if any(uses_tool(t, spec) for t in texts):
                    first_use = i
                    break
            if first_use is not None and not installed:
                steps.insert(first_use, Step.run(spec.install))
                warnings.append(TranspileWarning(
                    PACKAGE_INJECTED, f"{spec.tool} is not preinstalled on hosted runners; added {spec.install!r}",
                    f"jobs.{job_id}.steps[{first_use}]"))
        jobs[job_id] = replace(job, steps=tuple(steps))
    return replace(wf, jobs=jobs), warnings


def attach_credentials(wf: Workflow, credentials: Mapping[str, CredentialSpec]
                       ) -> tuple[Workflow, list[TranspileWarning]]:
    """Give steps that call a token-needing tool the token from ``secrets``.
    GITHUB_TOKEN is preferred because every run has it."""
    warnings: list[TranspileWarning] = []
    jobs = {}
    for job_id, job in wf.jobs.items():
        steps = list(job.steps)
        for i, step in enumerate(steps):
            if step.kind != "run":
                continue
            tools = set().union(*(invoked_tools(c.text) for c in step.run_commands))
            for spec in credentials.values():
                if not tools & set(spec.executables) or not spec.env:
                    continue
                if set(spec.env) & (set(step.env) | set(job.env)):
                    continue
                name = "GITHUB_TOKEN" if "GITHUB_TOKEN" in spec.env else spec.env[0]
                env = dict(step.env)
                env[name] = "${{ secrets.%s }}" % name
                steps[i] = step = replace(step, env=env)
                warnings.append(TranspileWarning(
                    IMPLICIT_DEFAULT_ADDED, f"{spec.tool} token passed as {name} from secrets",
                    f"jobs.{job_id}.steps[{i}].env"))
        jobs[job_id] = replace(job, steps=tuple(steps))
    return replace(wf, jobs=jobs), warnings


# --- top level -------------------------------------------------------------


def map_triggers(config: TravisConfig, opts: TranspileOptions, warnings: list) -> dict:
    triggers: dict[str, Optional[EventFilter]] = {t: None for t in opts.default_triggers}
    bf = config.branch_filter
    if bf is None:
        return triggers
    if bf.include and bf.exclude:
        warnings.append(TranspileWarning(
            DROPPED_UNKNOWN_KEY, "branches.except ignored because branches.only is also set", "branches.except"))
    if bf.include:
        flt = EventFilter(branches=tuple(bf.include))
    else:
        flt = EventFilter(branches_ignore=tuple(bf.exclude))
    triggers["push"] = flt
    return triggers


def _first(values):
    return values[0] if values else None


def _stage_job(config, stage, needs, opts, warnings, main_matrix) -> Job:
    entries = stage.jobs
    env_entries = list(config.global_env)
    for entry in entries:
        env_entries.extend(entry.env)
    env = map_env(env_entries, warnings, f"stages.{stage.name}.env")
    runs_on: Any = opts.default_runner
    os_names = [e.os for e in entries if e.os] or list(config.os_list[:1])
    if os_names:
        runs_on = _runner(os_names[0], warnings, f"stages.{stage.name}.os")
    steps = _phase_steps(_stage_phases(config, entries))
    matrix = None

    entry_versions = _versions(config, [v for e in entries for v in e.versions])
    is_main = stage.name == DEFAULT_STAGE and (not entries or any(not e.defines_phases for e in entries))
    if is_main and not entry_versions:
        # The default stage carries the top-level build matrix.
        matrix = main_matrix
        if len(config.os_list) > 1:
            runs_on = "${{ matrix.os }}"
        if config.env_matrix:
            env.update(_env_refs(config.env_matrix))
    else:
        versions = list(dict.fromkeys(entry_versions)) or list(_versions(config, config.versions[:1]))
        if len(versions) > 1:
            matrix = Matrix(axes={version_axis_name(config.language): tuple(versions)})
        elif versions:
            setup = _setup_step(config, opts, versions[0])
            if setup is not None:
                steps.insert(0, setup)
    extras: dict[str, Any] = {}
    names = [e.name for e in entries if e.name]
    if len(entries) == 1 and names:
        extras["name"] = names[0]
    for entry in entries:
        for key in entry.extras:
            warnings.append(TranspileWarning(
                DROPPED_UNKNOWN_KEY, f"job key {key!r} dropped", f"jobs.include[{entry.index}].{key}"))
    if matrix is not None and matrix.empty:
        matrix = None
    return Job(runs_on=runs_on, needs=tuple(needs), strategy_matrix=matrix, env=env,
               steps=tuple(steps), extras=extras)


def _env_refs(rows) -> dict[str, str]:
    names = list(dict.fromkeys(e.name for row in rows for e in row))
    return {n: "${{ matrix.env.%s }}" % n for n in names}


def _main_job(config, opts, warnings, matrix) -> Job:
    env = map_env(config.global_env, warnings, "env.global")
    names = set()
    if config.env_matrix:
        names.update(e.name for row in config.env_matrix for e in row)
    for entry in matrix.include:
        if isinstance(entry.get("env"), Mapping):
            names.update(entry["env"])
    for name in sorted(names, key=lambda n: n):
        env.setdefault(name, "${{ matrix.env.%s }}" % name)
    runs_on: Any = opts.default_runner
    if len(config.os_list) > 1 or any("os" in e for e in matrix.include):
        runs_on = "${{ matrix.os }}"
    elif config.os_list:
        runs_on = _runner(config.os_list[0], warnings, "os")
    return Job(runs_on=runs_on, strategy_matrix=None if matrix.empty else matrix, env=env,
               steps=tuple(_phase_steps(config.phases)))


def transpile(config: TravisConfig, opts: Optional[TranspileOptions] = None
              ) -> tuple[Workflow, list[TranspileWarning]]:
    opts = opts or TranspileOptions()
    has_entries = bool(config.stages) or bool(config.matrix_extras.include)
    if not any(config.phases.values()) and not has_entries:
        raise TranspileError("nothing to translate: no phase commands and no jobs")

    warnings: list[TranspileWarning] = []
    triggers = map_triggers(config, opts, warnings)
    matrix = map_matrix(config, opts, warnings)

    jobs: dict[str, Job] = {}
    if config.stages:
        for (job_id, needs), stage in zip(map_stages(config), config.stages):
            jobs[job_id] = _stage_job(config, stage, needs, opts, warnings, matrix)
    else:
        jobs["build"] = _main_job(config, opts, warnings, matrix)

    if config.notifications is not None:
        warnings.append(TranspileWarning(
            DROPPED_NOTIFICATIONS, "notifications are configured in the repository settings, not the workflow",
            "notifications"))
    for key in config.raw_extras:
        warnings.append(TranspileWarning(DROPPED_UNKNOWN_KEY, f"top-level key {key!r} has no equivalent", key))

    wf = Workflow(name=opts.workflow_name, triggers=triggers, jobs=jobs)
    wf, more = materialize_defaults(wf, config, opts)
    warnings.extend(more)
    wf, more = inject_known_packages(wf, config, opts.package_table)
    warnings.extend(more)
    wf, more = attach_credentials(wf, opts.credentials)
    warnings.extend(more)
    return wf, warnings


def transpile_text(travis_text: str, opts: Optional[TranspileOptions] = None) -> tuple[str, list[TranspileWarning]]:
    from .frontend import parse_travis, render_workflow

    wf, warnings = transpile(parse_travis(travis_text), opts)
    return render_workflow(wf), warnings
