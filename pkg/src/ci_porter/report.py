"""Per-case results and corpus aggregates.

JSON is the canonical form; :func:`render_text` is derived from it.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from . import __version__
from .frontend.loader import YamlParseError
from .frontend.travis import EmptyConfigError, TravisParseError, parse_travis
from .lint import Issue, LintContext, count_by_type, lint
from .llm.build import simulate_build
from .metrics import (
    DEFAULT_K,
    DEFAULT_N_MAX,
    BuildOutcome,
    SharedNgramSet,
    build_success_rate,
    crystal_bleu,
    median,
    round3,
    text_similarity,
    tokenize,
    trivially_shared_ngrams,
)


class ReportError(ValueError):
    pass


class OrphanError(ReportError):
    def __init__(self, missing_candidates: Sequence[str], missing_records: Sequence[str]):
        parts = []
        if missing_candidates:
            parts.append("records without a candidate: " + ", ".join(sorted(missing_candidates)))
        if missing_records:
            parts.append("candidates without a record: " + ", ".join(sorted(missing_records)))
        super().__init__("; ".join(parts))
        self.missing_candidates = tuple(sorted(missing_candidates))
        self.missing_records = tuple(sorted(missing_records))


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    issues: tuple[Issue, ...]
    build: BuildOutcome
    cs: Optional[float] = None
    cb: Optional[float] = None
    trace: tuple = ()

    def to_dict(self) -> dict:
        data = {
            "case_id": self.case_id,
            "issues": [i.to_dict() for i in self.issues],
            "build": self.build.to_dict(),
            "cs": self.cs,
            "cb": self.cb,
        }
        if self.trace:
            data["trace"] = [dict(t) for t in self.trace]
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "CaseResult":
        return cls(
            case_id=str(data["case_id"]),
            issues=tuple(Issue.from_dict(i) for i in data.get("issues", ())),
            build=BuildOutcome.from_dict(data["build"]),
            cs=data.get("cs"),
            cb=data.get("cb"),
            trace=tuple(data.get("trace", ())),
        )


def compute_aggregates(cases: Sequence[CaseResult]) -> dict:
    if not cases:
        raise ReportError("a report needs at least one case")
    bsr = build_success_rate([c.build for c in cases])
    return {
        "bsr": round3(bsr),
        "bsr_exact": f"{bsr.numerator}/{bsr.denominator}" if bsr.denominator != 1 else str(bsr.numerator),
        "successes": sum(c.build.ok for c in cases),
        "total": len(cases),
        "cs_median": median(c.cs for c in cases),
        "cb_median": median(c.cb for c in cases),
        "issue_counts_by_type": count_by_type(i for c in cases for i in c.issues),
    }


@dataclass(frozen=True)
class Report:
    cases: tuple[CaseResult, ...]
    aggregates: dict = field(default_factory=dict)
    tool_version: str = __version__
    extra: dict = field(default_factory=dict, compare=False)

    @classmethod
    def build(cls, cases: Sequence[CaseResult], **extra) -> "Report":
        cases = tuple(cases)
        return cls(cases, compute_aggregates(cases), __version__, dict(extra))

    def check(self) -> None:
        expected = compute_aggregates(self.cases)
        if expected != self.aggregates:
            diff = sorted(k for k in set(expected) | set(self.aggregates)
                          if expected.get(k) != self.aggregates.get(k))
            raise ReportError(f"stored aggregates disagree with the cases: {', '.join(diff)}")

    @property
    def bsr(self) -> Fraction:
        return build_success_rate([c.build for c in self.cases])

    def to_dict(self) -> dict:
        data = {
            "tool_version": self.tool_version,
            "cases": [c.to_dict() for c in self.cases],
            "aggregates": self.aggregates,
        }
        data.update(self.extra)
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping, verify: bool = True) -> "Report":
        known = {"tool_version", "cases", "aggregates"}
        report = cls(
            cases=tuple(CaseResult.from_dict(c) for c in data["cases"]),
            aggregates=dict(data["aggregates"]),
            tool_version=str(data.get("tool_version", "")),
            extra={k: v for k, v in data.items() if k not in known},
        )
        if verify:
            report.check()
        return report

    @classmethod
    def from_json(cls, text: str, verify: bool = True) -> "Report":
        return cls.from_dict(json.loads(text), verify)


def _fmt(value) -> str:
    return "-" if value is None else f"{value:.3f}"


def render_text(report_dict: Mapping) -> str:
    """Plain-text summary derived from the JSON form."""
    agg = report_dict["aggregates"]
    lines = [f"ci-porter {report_dict.get('tool_version', '')}"]
    for case in report_dict["cases"]:
        build = case["build"]
        lines.append(f"{case['case_id']}: {build['status']}  cs={_fmt(case.get('cs'))}  "
                     f"cb={_fmt(case.get('cb'))}  issues={len(case.get('issues', ()))}")
        for msg in build.get("messages", ()):
            lines.append(f"    {msg}")
    lines.append(f"BSR {agg['bsr']:.3f} ({agg['successes']}/{agg['total']})  "
                 f"CS median {_fmt(agg['cs_median'])}  CB median {_fmt(agg['cb_median'])}")
    counts = {k: v for k, v in agg["issue_counts_by_type"].items() if v}
    if counts:
        lines.append("issues: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    return "\n".join(lines) + "\n"


def _record_fields(record) -> tuple[str, str, Optional[str]]:
    if isinstance(record, Mapping):
        case_id = record.get("id", record.get("case_id"))
        return str(case_id), record.get("source_text", ""), record.get("target_text")
    case_id = getattr(record, "id", None) or getattr(record, "case_id")
    return case_id, record.source_text, getattr(record, "target_text", None)


def context_for_source(source_text: str, base: Optional[LintContext] = None) -> LintContext:
    """Lint context carrying the parsed source; logic checks are skipped when
    the source does not parse."""
    base = base or LintContext()
    try:
        source = parse_travis(source_text) if source_text else None
    except (TravisParseError, EmptyConfigError, YamlParseError):
        source = None
    return replace(base, source=source)


def similarity(candidate_text: str, target_text: Optional[str],
               shared: Optional[SharedNgramSet]) -> tuple[Optional[float], Optional[float]]:
    """(CS, CB) against the target; None when either side has no tokens."""
    if not target_text:
        return None, None
    cand, ref = tokenize(candidate_text), tokenize(target_text)
    if not cand or not ref:
        return None, None
    return text_similarity(candidate_text, target_text), crystal_bleu(cand, ref, shared)


def shared_for_targets(targets, n_max: int = DEFAULT_N_MAX, k: int = DEFAULT_K) -> Optional[SharedNgramSet]:
    references = [tokenize(t) for t in targets if t]
    return trivially_shared_ngrams(references, n_max, k) if references else None


def score_case(case_id: str, candidate_text: str, target_text: Optional[str],
               ctx: LintContext, shared: Optional[SharedNgramSet]) -> CaseResult:
    issues = tuple(lint(candidate_text, ctx))
    build = simulate_build(candidate_text, ctx, case_id)
    cs, cb = similarity(candidate_text, target_text, shared)
    return CaseResult(case_id, issues, build, cs, cb)


def score_corpus(records: Sequence, candidates: Mapping[str, str], ctx: Optional[LintContext] = None,
                 n_max: int = DEFAULT_N_MAX, k: int = DEFAULT_K,
                 shared: Optional[SharedNgramSet] = None, workers: int = 1) -> Report:
    """Lint, build and compare every candidate against its record.

    ``records`` may be TranslationRecords, TranslationCases or plain dicts;
    ``candidates`` maps case ids to candidate workflow text.  The shared
    n-gram set defaults to the one computed from the reference targets.
    """
    fields = [_record_fields(r) for r in records]
    ids = [f[0] for f in fields]
    if len(set(ids)) != len(ids):
        raise ReportError("duplicate case ids in records")
    missing_candidates = [i for i in ids if i not in candidates]
    missing_records = [i for i in candidates if i not in set(ids)]
    if missing_candidates or missing_records:
        raise OrphanError(missing_candidates, missing_records)
    if shared is None:
        shared = shared_for_targets((t for _, _, t in fields), n_max, k)

    def one(f):
        case_id, source, target = f
        return score_case(case_id, candidates[case_id], target, context_for_source(source, ctx), shared)

    if workers > 1 and len(fields) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cases = list(pool.map(one, fields))
    else:
        cases = [one(f) for f in fields]
    return Report.build(cases)
