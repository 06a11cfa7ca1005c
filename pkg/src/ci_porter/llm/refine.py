"""Single-pass translation and the iterative refinement batch loop.

Iteration 0 translates every case with the initial strategy.  Each later
iteration re-prompts only the cases that still fail, giving the model the
faulty workflow and its build errors.  The loop ends when every case is
fixed, when an iteration fixes no new case, or at ``max_iters``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

from ..metrics import FAILURE, BuildOutcome
from .extract import ExtractionError, extract_config
from .prompts import BASIC, GUIDELINE, ONE_SHOT, REFINEMENT, PromptInstance, build_prompt
from .providers import Provider, ProviderTransportError, user_request

PENDING = "pending"
FIXED = "fixed"
EXHAUSTED = "exhausted"

DEFAULT_MAX_ITERS = 5
ERROR_LINE_LIMIT = 100

# CLI strategy name -> (initial prompt strategy, refine afterwards?)
STRATEGIES = {
    "basic": (BASIC, False),
    "one-shot": (ONE_SHOT, False),
    "guideline": (GUIDELINE, False),
    "ir": (BASIC, True),
    "guideline-ir": (GUIDELINE, True),
}


@dataclass(frozen=True)
class TranslationCase:
    case_id: str
    source_text: str
    target_text: Optional[str] = None


@dataclass(frozen=True)
class RefinementState:
    case_id: str
    iteration: int
    current_text: str
    last_outcome: Optional[BuildOutcome] = None
    status: str = PENDING
    trace: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.iteration < 0:
            raise ValueError("iteration must be >= 0")
        if self.status == FIXED and (self.last_outcome is None or not self.last_outcome.ok):
            raise ValueError("a fixed case needs a successful last build")

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "iteration": self.iteration,
            "status": self.status,
            "build": self.last_outcome.to_dict() if self.last_outcome else None,
            "trace": [dict(t) for t in self.trace],
        }


class BatchResult(dict):
    """case_id -> RefinementState, plus loop bookkeeping."""

    def __init__(self, states, fixed_history, provider_calls, iterations_run):
        super().__init__(states)
        self.fixed_history: list[frozenset] = fixed_history
        self.provider_calls = provider_calls
        self.iterations_run = iterations_run


def truncate_lines(messages: Sequence[str], limit: int = ERROR_LINE_LIMIT) -> str:
    lines = "\n".join(messages).splitlines()
    if len(lines) > limit:
        lines = lines[:limit] + [f"... ({len(lines) - limit} more lines omitted)"]
    return "\n".join(lines)


def translate_once(provider: Provider, strategy: str, case: TranslationCase,
                   context: Optional[Mapping[str, str]] = None, model: str = "mock",
                   iteration: int = 0, temperature: float = 0.0) -> tuple[str, PromptInstance]:
    """One provider round trip.  Raises ProviderTransportError (retriable)
    or ExtractionError (the reply held no configuration)."""
    prompt = build_prompt(strategy, case.source_text, context)
    request = user_request(prompt.text, model, temperature,
                           case_id=case.case_id, iteration=iteration, strategy=strategy)
    try:
        response = provider.complete(request)
    except ProviderTransportError as exc:
        if exc.case_id is None:
            raise ProviderTransportError(str(exc), case.case_id) from exc
        raise
    return extract_config(response.content), prompt


def _attempt(provider, build, case, strategy, context, model, iteration) -> tuple[str, BuildOutcome, dict]:
    try:
        text, _ = translate_once(provider, strategy, case, context, model, iteration)
    except ProviderTransportError as exc:
        outcome = BuildOutcome(case.case_id, FAILURE, (f"provider error: {exc}",))
        return None, outcome, {"iteration": iteration, "status": "transport_error"}
    except ExtractionError as exc:
        if exc.region:
            text = exc.region
            outcome = build(case, text)
            if outcome.ok:
                outcome = BuildOutcome(case.case_id, FAILURE, (f"extraction failure: {exc}",))
        else:
            text = ""
            outcome = BuildOutcome(case.case_id, FAILURE, (f"extraction failure: {exc}",))
        return text, outcome, {"iteration": iteration, "status": "extraction_failure"}
    outcome = build(case, text)
    return text, outcome, {"iteration": iteration, "status": outcome.status}


def _run(cases: Sequence[TranslationCase], provider: Provider, build, max_iters: int,
         initial: str, context_for: Optional[Callable] = None, model: str = "mock",
         workers: int = 1, error_line_limit: int = ERROR_LINE_LIMIT) -> BatchResult:
    ids = [c.case_id for c in cases]
    if len(set(ids)) != len(ids):
        raise ValueError("case ids must be unique")
    context_for = context_for or (lambda case: {})
    states: dict[str, RefinementState] = {}
    calls = 0
    history: list[frozenset] = []

    def run_iteration(jobs):
        # Strict barrier: every case of this iteration finishes before the next starts.
        if workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(lambda job: _attempt(*job), jobs))
        return [_attempt(*job) for job in jobs]

    jobs = [(provider, build, c, initial, context_for(c), model, 0) for c in cases]
    for case, (text, outcome, entry) in zip(cases, run_iteration(jobs)):
        calls += 1
        states[case.case_id] = RefinementState(
            case.case_id, 0, text or "", outcome, FIXED if outcome.ok else PENDING, (entry,))
    history.append(frozenset(k for k, s in states.items() if s.status == FIXED))
    iterations_run = 1

    for iteration in range(1, max_iters + 1):
        pending = [c for c in cases if states[c.case_id].status == PENDING]
        if not pending:
            break
        jobs = []
        for case in pending:
            state = states[case.case_id]
            context = {
                "FAULTY_CONFIGURATION": state.current_text or "(no configuration was produced)",
                "ERROR_MESSAGES": truncate_lines(state.last_outcome.messages, error_line_limit),
            }
            jobs.append((provider, build, case, REFINEMENT, context, model, iteration))
        newly_fixed = 0
        for case, (text, outcome, entry) in zip(pending, run_iteration(jobs)):
            calls += 1
            state = states[case.case_id]
            status = FIXED if outcome.ok else PENDING
            newly_fixed += status == FIXED
            states[case.case_id] = replace(
                state, iteration=iteration, current_text=text if text is not None else state.current_text,
                last_outcome=outcome, status=status, trace=state.trace + (entry,))
        history.append(frozenset(k for k, s in states.items() if s.status == FIXED))
        iterations_run += 1
        if newly_fixed == 0:
            break

    for case_id, state in states.items():
        if state.status == PENDING:
            states[case_id] = replace(state, status=EXHAUSTED)
    return BatchResult(states, history, calls, iterations_run)


def refine_batch(cases: Sequence[TranslationCase], provider: Provider, build,
                 max_iters: int = DEFAULT_MAX_ITERS, strategy_for_initial: str = BASIC,
                 context_for: Optional[Callable] = None, model: str = "mock",
                 workers: int = 1, error_line_limit: int = ERROR_LINE_LIMIT) -> BatchResult:
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    return _run(cases, provider, build, max_iters, strategy_for_initial, context_for, model,
                workers, error_line_limit)


def run_strategy(name: str, cases: Sequence[TranslationCase], provider: Provider, build,
                 max_iters: int = DEFAULT_MAX_ITERS, context_for: Optional[Callable] = None,
                 model: str = "mock", workers: int = 1) -> BatchResult:
    """Run one of the named strategies (basic, one-shot, guideline, ir, guideline-ir)."""
    if name not in STRATEGIES:
        raise ValueError(f"unknown strategy {name!r}; choose from {', '.join(STRATEGIES)}")
    initial, refines = STRATEGIES[name]
    return _run(cases, provider, build, max_iters if refines else 0, initial, context_for, model, workers)
