"""Parse ``.travis.yml`` text into a :class:`TravisConfig`."""
from __future__ import annotations

import shlex
from typing import Any

from ..model import (
    PHASES,
    VERSION_KEYS,
    BranchFilter,
    CacheSpec,
    Command,
    EnvEntry,
    MatrixExtras,
    StageDef,
    TravisConfig,
    TravisJob,
    VersionLiteral,
    split_commands,
)
from .loader import YamlParseError, as_bool, as_list, load, plainify


class EmptyConfigError(ValueError):
    pass


class TravisParseError(ValueError):
    pass


DEFAULT_STAGE = "test"


def parse_travis(text: str) -> TravisConfig:
    if not text or not text.strip():
        raise EmptyConfigError("empty configuration")
    root = load(text)  # YamlParseError propagates with line/column
    if root is None:
        raise EmptyConfigError("empty configuration")
    if not isinstance(root, dict):
        raise TravisParseError("top level of a Travis configuration must be a mapping")

    named: list[str] = []

    def claim(key):
        if key in root:
            named.append(key)
            return root[key]
        return None

    language = claim("language")
    language = str(language) if language is not None else ""
    if not language:
        for lang, key in VERSION_KEYS.items():
            if key in root:
                language = lang
                break

    versions: tuple[VersionLiteral, ...] = ()
    version_key = VERSION_KEYS.get(language)
    if version_key and version_key in root:
        versions = _versions(claim(version_key))

    os_list = tuple(str(v) for v in as_list(claim("os")) if v is not None)
    arch_list = tuple(str(v) for v in as_list(claim("arch")) if v is not None)
    global_env, env_rows = _parse_env(claim("env"))

    phases: dict[str, tuple[Command, ...]] = {}
    raw_extras: dict[str, Any] = {}
    for key in root:
        if key in PHASES:
            commands = _commands(root[key])
            if commands is None:
                raw_extras[key] = plainify(root[key])
            else:
                named.append(key)
                phases[key] = commands

    cache = _parse_cache(claim("cache"))
    notifications = claim("notifications")
    notifications = plainify(notifications) if notifications is not None else None
    branch_filter = _parse_branches(claim("branches"))

    declared_stages = []
    for item in as_list(claim("stages")):
        name = item.get("name") if isinstance(item, dict) else item
        if name is not None:
            declared_stages.append(str(name))
    if len(set(declared_stages)) != len(declared_stages):
        raise TravisParseError(f"duplicate stage names in {declared_stages}")

    jobs_key = "jobs" if "jobs" in root else ("matrix" if "matrix" in root else None)
    jobs_section = claim(jobs_key) if jobs_key else None
    if isinstance(jobs_section, list):
        jobs_section = {"include": jobs_section}
    jobs_section = jobs_section or {}

    entries = []
    current_stage = DEFAULT_STAGE
    staged = bool(declared_stages)
    for index, item in enumerate(as_list(jobs_section.get("include"))):
        if not isinstance(item, dict):
            continue
        if item.get("stage") is not None:
            current_stage = str(item["stage"])
            staged = True
        entries.append(_job_entry(item, current_stage, version_key, index))

    stages: tuple[StageDef, ...] = ()
    include_rows: tuple[TravisJob, ...] = ()
    if staged:
        order = list(declared_stages)
        for entry in entries:
            if entry.stage not in order:
                order.append(entry.stage)
        has_test = DEFAULT_STAGE in order
        if not has_test and not declared_stages and "script" in phases:
            order.insert(0, DEFAULT_STAGE)
        elif not has_test and any(e.stage == DEFAULT_STAGE for e in entries):
            order.insert(0, DEFAULT_STAGE)
        stages = tuple(
            StageDef(name, tuple(e for e in entries if e.stage == name)) for name in order
        )
    else:
        include_rows = tuple(entries)

    matrix_extras = MatrixExtras(
        include=include_rows,
        exclude=tuple(plainify(e) for e in as_list(jobs_section.get("exclude")) if isinstance(e, dict)),
        allow_failures=tuple(
            plainify(e) for e in as_list(jobs_section.get("allow_failures")) if isinstance(e, dict)
        ),
        fast_finish=as_bool(jobs_section.get("fast_finish")),
    )

    for key, value in root.items():
        if key not in named and key not in raw_extras:
            raw_extras[key] = plainify(value)

    return TravisConfig(
        language=language,
        versions=versions,
        os_list=os_list,
        arch_list=arch_list,
        global_env=global_env,
        env_matrix=env_rows,
        phases=phases,
        stages=stages,
        cache=cache,
        notifications=notifications,
        branch_filter=branch_filter,
        matrix_extras=matrix_extras,
        raw_extras=raw_extras,
        source_keys=tuple(root.keys()),
        named_keys=tuple(named),
    )


def _versions(value) -> tuple[VersionLiteral, ...]:
    out = []
    for item in as_list(value):
        if item is None or isinstance(item, (dict, list)):
            continue
        out.append(
            VersionLiteral(
                raw_text=str(item),
                quoted=bool(getattr(item, "quoted", False)),
                line=getattr(item, "line", None),
                column=getattr(item, "column", None),
            )
        )
    return tuple(out)


def _commands(value):
    """Commands of a phase value, or None when the value is not a command list."""
    if value is None:
        return ()
    if isinstance(value, str):
        return () if value.strip() == "skip" else split_commands(value)
    if isinstance(value, list) and all(isinstance(v, str) or v is None for v in value):
        out: list[Command] = []
        for item in value:
            if item is not None:
                out.extend(split_commands(item))
        return tuple(out)
    return None


def parse_assignments(text: str, origin: str = "assignment_string") -> list[EnvEntry]:
    """``"A=1 B='x y'"`` -> EnvEntry list; tokens without ``=`` are ignored."""
    try:
        tokens = shlex.split(str(text))
    except ValueError:
        tokens = str(text).split()
    entries = []
    for token in tokens:
        name, sep, value = token.partition("=")
        if sep and name:
            entries.append(EnvEntry(name, value, origin))
    return entries


def _env_row(item) -> tuple[EnvEntry, ...]:
    if isinstance(item, dict):
        return tuple(
            EnvEntry(str(k), "" if v is None else str(v), "key_value")
            for k, v in item.items()
            if k != "secure" and k and "=" not in str(k)
        )
    if isinstance(item, str):
        return tuple(parse_assignments(item))
    return ()


def _parse_env(value):
    """Return (global entries, matrix rows)."""
    if value is None:
        return (), ()
    if isinstance(value, str):
        return _env_row(value), ()
    if isinstance(value, list):
        rows = tuple(r for r in (_env_row(item) for item in value) if r)
        if len(rows) <= 1:
            return (rows[0] if rows else ()), ()
        return (), rows
    if isinstance(value, dict):
        global_entries: list[EnvEntry] = []
        rows: tuple = ()
        for key, sub in value.items():
            if key == "global":
                for item in as_list(sub):
                    global_entries.extend(_env_row(item))
            elif key in ("jobs", "matrix"):
                rows = tuple(r for r in (_env_row(item) for item in as_list(sub)) if r)
            elif key and "=" not in key:
                global_entries.append(EnvEntry(str(key), "" if sub is None else str(sub), "key_value"))
        return tuple(global_entries), rows
    return (), ()


def _parse_cache(value):
    if value is None:
        return None
    flag = as_bool(value)
    if flag is False:
        return None
    managers: list[str] = []
    directories: list[str] = []
    if isinstance(value, dict):
        for key, sub in value.items():
            if key == "directories":
                directories.extend(str(d) for d in as_list(sub))
            elif as_bool(sub) is not False:
                managers.append(str(key))
    else:
        for item in as_list(value):
            if isinstance(item, dict):
                directories.extend(str(d) for d in as_list(item.get("directories")))
            elif item is not None:
                managers.append(str(item))
    return CacheSpec(tuple(managers), tuple(directories))


def _parse_branches(value):
    if not isinstance(value, dict):
        return None
    include = tuple(str(v) for v in as_list(value.get("only")))
    exclude = tuple(str(v) for v in as_list(value.get("except")))
    if not include and not exclude:
        return None
    return BranchFilter(include, exclude)


def _job_entry(item: dict, stage: str, version_key, index: int) -> TravisJob:
    phases = {}
    extras = {}
    for key, value in item.items():
        if key in PHASES:
            commands = _commands(value)
            if commands is None:
                extras[key] = plainify(value)
            else:
                phases[key] = commands
    versions: tuple[VersionLiteral, ...] = ()
    if version_key and version_key in item:
        versions = _versions(item[version_key])
    env_global, env_rows = _parse_env(item.get("env"))
    env = env_global + tuple(e for row in env_rows for e in row)
    known = set(PHASES) | {"stage", "name", "env", "os", "arch", version_key}
    for key, value in item.items():
        if key not in known:
            extras[key] = plainify(value)
    os_value = item.get("os")
    arch_value = item.get("arch")
    return TravisJob(
        stage=stage,
        name=str(item["name"]) if item.get("name") is not None else None,
        phases=phases,
        versions=versions,
        env=env,
        os=str(os_value) if isinstance(os_value, str) else None,
        arch=str(arch_value) if isinstance(arch_value, str) else None,
        extras=extras,
        index=index,
    )


__all__ = ["parse_travis", "EmptyConfigError", "TravisParseError", "YamlParseError", "parse_assignments"]
