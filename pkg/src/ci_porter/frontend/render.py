"""Deterministic workflow rendering.

Output uses 2-space indentation and a fixed key order.  Scalars are written
plain when that is unambiguous and double-quoted otherwise; version-like
values with a trailing zero (``3.10``) are always quoted so a YAML reader
cannot turn them into floats.
"""
from __future__ import annotations

import json
from typing import Any

from ..model import (
    FILTER_KEYS,
    TRAILING_ZERO_RE,
    EventFilter,
    Job,
    Matrix,
    Step,
    VersionLiteral,
    Workflow,
    workflow_violations,
)
from .loader import NULL_WORDS


class RenderError(ValueError):
    pass


_BAD_FIRST = set("!&*|>'\"%@`#,[]{}")
_FLOW_CHARS = set(",[]{}")


def plain_safe(text: str) -> bool:
    if not text or text != text.strip():
        return False
    if text in NULL_WORDS or text.startswith(("---", "...")):
        return False
    if any(c in text for c in "\n\r\t"):
        return False
    first = text[0]
    if first in _BAD_FIRST:
        return False
    if first in "-?:" and (len(text) == 1 or text[1] == " "):
        return False
    if ": " in text or " #" in text or text.endswith(":"):
        return False
    return True


def _quote(text: str) -> str:
    return json.dumps(text, ensure_ascii=False)


def scalar(value: Any, flow: bool = False) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, VersionLiteral):
        text, force = value.raw_text, value.quoted or value.trailing_zero_hazard
    else:
        text = str(value)
        force = bool(getattr(value, "quoted", False)) or bool(TRAILING_ZERO_RE.match(text))
    if force or not plain_safe(text) or (flow and any(c in _FLOW_CHARS for c in text)):
        return _quote(text)
    return text


def _key(key: Any) -> str:
    text = str(key)
    if plain_safe(text) and not any(c in _FLOW_CHARS for c in text):
        return text
    return _quote(text)


def _is_scalar(value) -> bool:
    return not isinstance(value, (dict, list, tuple))


def _flow(value) -> str:
    """Flow-style text for scalars, short lists and mappings of scalars."""
    if isinstance(value, dict):
        return "{" + ", ".join(f"{_key(k)}: {_flow(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_flow(v) for v in value) + "]"
    return scalar(value, flow=True)


def _flowable(value) -> bool:
    if isinstance(value, dict):
        return all(_is_scalar(v) and "\n" not in str(v) for v in value.values())
    return _is_scalar(value) and "\n" not in str(value if value is not None else "")


def _block_scalar(text: str, indent: int) -> list[str] | None:
    lines = text.split("\n")
    if text.endswith("\n\n") or not lines[0] or lines[0][0] in " \t":
        return None
    if text.endswith("\n"):
        header, lines = "|", lines[:-1]
    else:
        header = "|-"
    pad = " " * indent
    return [header] + [pad + line if line else "" for line in lines]


def emit(key: Any, value: Any, indent: int, out: list[str]) -> None:
    pad = " " * indent
    label = f"{pad}{_key(key)}:"
    if value is None:
        out.append(label)
    elif isinstance(value, dict):
        if not value:
            out.append(f"{label} {{}}")
            return
        out.append(label)
        for k, v in value.items():
            emit(k, v, indent + 2, out)
    elif isinstance(value, (list, tuple)):
        if all(_flowable(v) for v in value):
            out.append(f"{label} {_flow(value)}")
            return
        out.append(label)
        for item in value:
            emit_item(item, indent + 2, out)
    elif isinstance(value, str) and "\n" in value:
        block = _block_scalar(str(value), indent + 2)
        if block is None:
            out.append(f"{label} {_quote(str(value))}")
        else:
            out.append(f"{label} {block[0]}")
            out.extend(block[1:])
    else:
        out.append(f"{label} {scalar(value)}")


def emit_item(item: Any, indent: int, out: list[str]) -> None:
    pad = " " * indent
    if isinstance(item, dict) and item:
        nested: list[str] = []
        for k, v in item.items():
            emit(k, v, indent + 2, nested)
        nested[0] = pad + "- " + nested[0][indent + 2:]
        out.extend(nested)
    elif isinstance(item, (dict, list, tuple)):
        out.append(f"{pad}- {json.dumps(_jsonable(item), ensure_ascii=False)}")
    elif isinstance(item, str) and "\n" in item:
        block = _block_scalar(str(item), indent + 2)
        if block is None:
            out.append(f"{pad}- {_quote(str(item))}")
        else:
            out.append(f"{pad}- {block[0]}")
            out.extend(block[1:])
    else:
        out.append(f"{pad}- {scalar(item)}")


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, VersionLiteral):
        return value.raw_text
    if isinstance(value, str):
        return str(value)
    return value


def _trigger_tree(triggers) -> Any:
    if all(f is None for f in triggers.values()):
        return list(triggers)
    tree = {}
    for event, flt in triggers.items():
        if flt is None:
            tree[event] = None
        elif isinstance(flt, EventFilter) and flt.raw is not None:
            tree[event] = flt.raw
        else:
            body = {}
            for yaml_key, attr in FILTER_KEYS.items():
                values = getattr(flt, attr)
                if values is not None:
                    body[yaml_key] = list(values)
            body.update(flt.extras)
            tree[event] = body
    return tree


def _matrix_tree(matrix: Matrix) -> Any:
    if matrix.expression is not None:
        return matrix.expression
    tree: dict[str, Any] = {k: list(v) for k, v in matrix.axes.items()}
    if matrix.include:
        tree["include"] = [dict(e) for e in matrix.include]
    if matrix.exclude:
        tree["exclude"] = [dict(e) for e in matrix.exclude]
    return tree


def step_tree(step: Step) -> dict:
    tree: dict[str, Any] = {}
    if step.name is not None:
        tree["name"] = step.name
    if step.condition is not None:
        tree["if"] = step.condition
    if step.kind == "uses":
        tree["uses"] = str(step.uses_ref)
    elif step.kind == "run":
        commands = step.run_commands
        if len(commands) == 1:
            tree["run"] = commands[0].text
        else:
            tree["run"] = "\n".join(c.text for c in commands) + "\n"
    if step.with_args:
        tree["with"] = step.with_args
    if step.env:
        tree["env"] = step.env
    tree.update(step.extras)
    return tree


def job_tree(job: Job) -> dict:
    tree: dict[str, Any] = {"runs-on": job.runs_on}
    if job.needs:
        tree["needs"] = list(job.needs)
    strategy: dict[str, Any] = {}
    if job.strategy_matrix is not None:
        strategy["matrix"] = _matrix_tree(job.strategy_matrix)
        if job.strategy_matrix.fail_fast is not None:
            strategy["fail-fast"] = job.strategy_matrix.fail_fast
    strategy.update(job.strategy_extras)
    if strategy:
        tree["strategy"] = strategy
    if job.env:
        tree["env"] = job.env
    tree.update(job.extras)
    tree["steps"] = [step_tree(s) for s in job.steps]
    return tree


def render_workflow(wf: Workflow) -> str:
    problems = workflow_violations(wf)
    if problems:
        raise RenderError("cannot render workflow: " + "; ".join(problems))
    out: list[str] = []
    if wf.name is not None:
        emit("name", wf.name, 0, out)
    emit("on", _trigger_tree(wf.triggers), 0, out)
    for key, value in wf.extras.items():
        emit(key, value, 0, out)
    out.append("jobs:")
    for job_id, job in wf.jobs.items():
        emit(job_id, job_tree(job), 2, out)
    return "\n".join(out) + "\n"


__all__ = ["render_workflow", "RenderError", "scalar", "plain_safe", "emit"]
