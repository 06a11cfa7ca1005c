"""Parse GitHub Actions workflow text into a :class:`Workflow`.

Parsing is deliberately lenient: a candidate with broken invariants still
produces a model so the linter can report on it.  Use
:func:`ci_porter.model.workflow_violations` to check invariants.
"""
from __future__ import annotations

from typing import Any

from ..model import (
    FILTER_KEYS,
    ActionRef,
    EventFilter,
    Job,
    Matrix,
    Step,
    VersionLiteral,
    Workflow,
    split_commands,
)
from .loader import YamlScalar, as_bool, as_list, load


class NotAWorkflowError(ValueError):
    pass


JOB_KEYS = {"runs-on", "needs", "strategy", "env", "steps"}
STEP_KEYS = {"name", "uses", "run", "with", "env", "if"}


def parse_workflow(text: str) -> Workflow:
    if not text or not text.strip():
        raise NotAWorkflowError("not a workflow: empty document")
    root = load(text)
    return workflow_from_tree(root)


def workflow_from_tree(root: Any) -> Workflow:
    if not isinstance(root, dict) or not isinstance(root.get("jobs"), dict):
        raise NotAWorkflowError("not a workflow: document has no 'jobs' mapping")
    extras = {k: v for k, v in root.items() if k not in ("name", "on", "jobs")}
    jobs = {}
    for job_id, body in root["jobs"].items():
        jobs[str(job_id)] = _job(body if isinstance(body, dict) else {})
    name = root.get("name")
    return Workflow(
        name=str(name) if name is not None else None,
        triggers=_triggers(root.get("on")),
        jobs=jobs,
        extras=extras,
    )


def _strings(value) -> tuple[str, ...]:
    return tuple(str(v) for v in as_list(value) if v is not None)


def _triggers(value) -> dict:
    if value is None:
        return {}
    if isinstance(value, str):
        return {str(value): None}
    if isinstance(value, list):
        return {str(v): None for v in value if v is not None}
    triggers = {}
    if isinstance(value, dict):
        for event, payload in value.items():
            triggers[str(event)] = _event_filter(payload)
    return triggers


def _event_filter(payload):
    if payload is None:
        return None
    if not isinstance(payload, dict):
        return EventFilter(raw=payload)
    kwargs: dict[str, Any] = {}
    extras = {}
    for key, sub in payload.items():
        if key in FILTER_KEYS:
            kwargs[FILTER_KEYS[key]] = _strings(sub)
        else:
            extras[key] = sub
    return EventFilter(extras=extras, **kwargs)


def axis_value(value):
    if isinstance(value, str):
        return VersionLiteral(str(value), bool(getattr(value, "quoted", False)),
                              getattr(value, "line", None), getattr(value, "column", None))
    if isinstance(value, dict):
        return {str(k): v for k, v in value.items()}
    return value


def _matrix(strategy: dict) -> tuple:
    fail_fast = as_bool(strategy.get("fail-fast")) if "fail-fast" in strategy else None
    extras = {k: v for k, v in strategy.items() if k not in ("matrix", "fail-fast")}
    if "fail-fast" in strategy and fail_fast is None:
        extras["fail-fast"] = strategy["fail-fast"]
    raw = strategy.get("matrix")
    if raw is None:
        return None, extras, fail_fast
    if isinstance(raw, str):
        return Matrix(expression=str(raw), fail_fast=fail_fast), extras, fail_fast
    axes, include, exclude = {}, (), ()
    if isinstance(raw, dict):
        for key, sub in raw.items():
            if key == "include":
                include = tuple(dict(e) for e in as_list(sub) if isinstance(e, dict))
            elif key == "exclude":
                exclude = tuple(dict(e) for e in as_list(sub) if isinstance(e, dict))
            else:
                axes[str(key)] = tuple(axis_value(v) for v in as_list(sub))
    return Matrix(axes=axes, include=include, exclude=exclude, fail_fast=fail_fast), extras, fail_fast


def _mapping(value):
    """Mappings are copied; a non-mapping value (a Travis-style ``env`` string
    or list) is kept as-is so the linter and renderer still see it."""
    if value is None:
        return {}
    if isinstance(value, dict):
        return dict(value)
    return value


def _job(body: dict) -> Job:
    strategy = body.get("strategy")
    matrix, strategy_extras = None, {}
    if isinstance(strategy, dict):
        matrix, strategy_extras, fail_fast = _matrix(strategy)
        if matrix is None and fail_fast is not None:
            strategy_extras = dict(strategy_extras, **{"fail-fast": strategy["fail-fast"]})
    extras = {k: v for k, v in body.items() if k not in JOB_KEYS}
    if strategy is not None and not isinstance(strategy, dict):
        extras["strategy"] = strategy
    env = body.get("env")
    return Job(
        runs_on=body.get("runs-on"),
        needs=_strings(body.get("needs")),
        strategy_matrix=matrix,
        env=_mapping(env),
        steps=tuple(_step(s) for s in as_list(body.get("steps"))),
        strategy_extras=strategy_extras,
        extras=extras,
    )


def _step(body) -> Step:
    if not isinstance(body, dict):
        # A bare scalar where a step mapping was expected.
        return Step(kind=None, extras={"": body})
    has_uses = body.get("uses") is not None
    has_run = body.get("run") is not None
    if has_uses and not has_run:
        kind = "uses"
    elif has_run and not has_uses:
        kind = "run"
    else:
        kind = None
    with_args = body.get("with")
    env = body.get("env")
    condition = body.get("if")
    name = body.get("name")
    extras = {k: v for k, v in body.items() if k not in STEP_KEYS}
    if kind is None:
        extras.update({k: body[k] for k in ("uses", "run") if k in body})
    return Step(
        kind=kind,
        name=str(name) if name is not None else None,
        uses_ref=ActionRef.parse(body["uses"]) if kind == "uses" else None,
        run_commands=split_commands(body["run"]) if kind == "run" else (),
        with_args=_mapping(with_args),
        env=_mapping(env),
        condition=str(condition) if condition is not None else None,
        extras=extras,
    )


__all__ = ["parse_workflow", "workflow_from_tree", "NotAWorkflowError", "YamlScalar"]
