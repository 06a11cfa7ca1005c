"""Editable data tables: action registry, package table, credentials, deny-list.

Each table ships as a YAML file under ``ci_porter/data`` and can be replaced
by a user-supplied file of the same schema.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Union

import yaml

from .model import ActionRef

PathLike = Union[str, Path]

_VERSION_RE = re.compile(r"^v?(\d+)((?:\.\d+)*)$")


class RegistryError(ValueError):
    pass


def parse_version(text) -> Optional[tuple[int, ...]]:
    """``"v3"`` -> (3,), ``"v3.1.2"`` -> (3, 1, 2); None for SHAs and branch names."""
    m = _VERSION_RE.match(str(text).strip())
    if not m:
        return None
    rest = [int(p) for p in m.group(2).split(".") if p]
    return (int(m.group(1)), *rest)


def version_below(version, minimum) -> bool:
    have, floor = parse_version(version), parse_version(minimum)
    if have is None or floor is None:
        return False
    width = max(len(have), len(floor))
    return have + (0,) * (width - len(have)) < floor + (0,) * (width - len(floor))


def read_data(name: str, path: Optional[PathLike] = None):
    """Load a bundled data file, or ``path`` when given."""
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
    else:
        text = resources.files("ci_porter.data").joinpath(name).read_text(encoding="utf-8")
    return yaml.safe_load(text)


@dataclass(frozen=True)
class RegistryEntry:
    purpose: str
    action: str
    version: str
    minimum: str

    @property
    def ref(self) -> ActionRef:
        return ActionRef(self.action, self.version)


class ActionRegistry:
    """purpose -> pinned action reference plus the oldest accepted version."""

    def __init__(self, entries: Mapping[str, RegistryEntry]):
        self.entries = dict(entries)
        self._by_action = {e.action: e for e in self.entries.values()}
        for entry in self.entries.values():
            if version_below(entry.version, entry.minimum):
                raise RegistryError(
                    f"{entry.purpose}: version {entry.version} is below its minimum {entry.minimum}"
                )

    @classmethod
    def from_mapping(cls, data: Mapping) -> "ActionRegistry":
        entries = {}
        for purpose, body in (data or {}).items():
            if not isinstance(body, Mapping) or "action" not in body or "version" not in body:
                raise RegistryError(f"registry entry {purpose!r} needs 'action' and 'version'")
            entries[str(purpose)] = RegistryEntry(
                str(purpose), str(body["action"]), str(body["version"]),
                str(body.get("minimum", body["version"])),
            )
        return cls(entries)

    @classmethod
    def load(cls, path: Optional[PathLike] = None) -> "ActionRegistry":
        return cls.from_mapping(read_data("registry.yaml", path))

    def get(self, purpose: str) -> Optional[ActionRef]:
        entry = self.entries.get(purpose)
        return entry.ref if entry else None

    def purpose_of(self, action_name: str) -> Optional[str]:
        entry = self._by_action.get(action_name)
        return entry.purpose if entry else None

    def minimum_for(self, action_name: str) -> Optional[str]:
        entry = self._by_action.get(action_name)
        return entry.minimum if entry else None

    def is_obsolete(self, ref: ActionRef) -> bool:
        floor = self.minimum_for(ref.name)
        return bool(floor and ref.version and version_below(ref.version, floor))


@dataclass(frozen=True)
class PackageSpec:
    tool: str
    install: str
    executables: tuple[str, ...]


def package_table_from_mapping(data: Mapping) -> dict[str, PackageSpec]:
    table = {}
    for tool, body in (data or {}).items():
        if isinstance(body, str):
            table[str(tool)] = PackageSpec(str(tool), body, (str(tool),))
        else:
            exes = tuple(str(e) for e in body.get("executables") or [tool])
            table[str(tool)] = PackageSpec(str(tool), str(body["install"]), exes)
    return table


def load_package_table(path: Optional[PathLike] = None) -> dict[str, PackageSpec]:
    return package_table_from_mapping(read_data("packages.yaml", path))


@dataclass(frozen=True)
class CredentialSpec:
    tool: str
    executables: tuple[str, ...]
    env: tuple[str, ...]


def load_credentials(path: Optional[PathLike] = None) -> dict[str, CredentialSpec]:
    table = {}
    for tool, body in (read_data("credentials.yaml", path) or {}).items():
        table[str(tool)] = CredentialSpec(
            str(tool),
            tuple(str(e) for e in body.get("executables") or [tool]),
            tuple(str(e) for e in body.get("env") or ()),
        )
    return table


def load_denylist(path: Optional[PathLike] = None) -> dict[str, frozenset]:
    data = read_data("denylist.yaml", path) or {}
    return {str(level): frozenset(str(k) for k in keys or ()) for level, keys in data.items()}
