"""Helpers for walking a loaded candidate tree with document paths and lines."""
from __future__ import annotations

from typing import Any, Iterator, Optional

from ..frontend.loader import line_of


def text_line(text: str, line: Optional[int]) -> str:
    lines = text.splitlines()
    if line is None or not 1 <= line <= len(lines):
        return ""
    return lines[line - 1].strip()


def jobs(tree: Any) -> Iterator[tuple[str, dict]]:
    if not isinstance(tree, dict) or not isinstance(tree.get("jobs"), dict):
        return
    for job_id, body in tree["jobs"].items():
        if isinstance(body, dict):
            yield str(job_id), body


def steps(job: dict) -> Iterator[tuple[int, dict]]:
    items = job.get("steps")
    if not isinstance(items, list):
        return
    for i, step in enumerate(items):
        if isinstance(step, dict):
            yield i, step


def run_lines(step: dict) -> list[str]:
    run = step.get("run")
    if not isinstance(run, str):
        return []
    return [line.strip() for line in str(run).splitlines() if line.strip()]


def scalars(value: Any, path: str, parent: Any = None, key: Any = None) -> Iterator[tuple[str, Any, Any, Any]]:
    """Yield (path, parent container, key, scalar) for every string leaf."""
    if isinstance(value, dict):
        for k, v in value.items():
            yield from scalars(v, f"{path}.{k}" if path else str(k), value, k)
    elif isinstance(value, list):
        for i, v in enumerate(value):
            yield from scalars(v, f"{path}[{i}]", value, i)
    elif isinstance(value, str):
        yield path, parent, key, value


def line_at(value: Any, container: Any = None, key: Any = None) -> Optional[int]:
    line = getattr(value, "line", None)
    if line is None and container is not None:
        line = line_of(container, key)
    return line


def uses_name(step: dict) -> Optional[str]:
    uses = step.get("uses")
    if not isinstance(uses, str):
        return None
    return str(uses).split("@", 1)[0].strip()
