"""Build verdicts.  The shipped provider is an offline simulation: a
candidate builds iff it parses, satisfies the workflow invariants and has no
blocking lint issue."""
from __future__ import annotations

from typing import Callable, Optional, Protocol

from ..frontend.loader import YamlParseError, load
from ..frontend.workflow import NotAWorkflowError, workflow_from_tree
from ..lint import LintContext, lint
from ..metrics import FAILURE, SUCCESS, BuildOutcome
from ..model import workflow_violations


def simulate_build(candidate_text: str, ctx: Optional[LintContext] = None, case_id: str = "") -> BuildOutcome:
    ctx = ctx or LintContext()
    messages = [i.render() for i in lint(candidate_text, ctx) if i.blocking]
    try:
        wf = workflow_from_tree(load(candidate_text))
    except (YamlParseError, NotAWorkflowError) as exc:
        if not messages:
            messages.append(f"workflow could not be loaded: {exc}")
    else:
        messages.extend(f"invalid workflow: {p}" for p in workflow_violations(wf))
    messages = list(dict.fromkeys(messages))
    return BuildOutcome(case_id, FAILURE if messages else SUCCESS, tuple(messages))


class BuildProvider(Protocol):
    def __call__(self, case, candidate_text: str) -> BuildOutcome: ...


class SimulatedBuild:
    """Build provider backed by :func:`simulate_build`.  ``context_for`` gives
    the lint context per case (for instance with that case's source)."""

    def __init__(self, context_for: Optional[Callable[[object], LintContext]] = None):
        self.context_for = context_for or (lambda case: LintContext())

    def __call__(self, case, candidate_text: str) -> BuildOutcome:
        return simulate_build(candidate_text, self.context_for(case), getattr(case, "case_id", ""))


class RemoteBuild:
    """Interface for a provider that pushes the candidate to a live CI
    service and waits for the run.  Not implemented offline."""

    def __call__(self, case, candidate_text: str) -> BuildOutcome:
        raise NotImplementedError("remote builds are not available in this toolkit")
