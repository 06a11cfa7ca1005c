"""``ci-porter`` command line.

Exit codes: 0 success, 1 blocking lint issues, 2 usage or input errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .frontend import EmptyConfigError, RenderError, TravisParseError, YamlParseError, parse_travis
from .lint import LintContext, lint
from .llm import (
    GuidelineSet,
    HttpProvider,
    MockProvider,
    SimulatedBuild,
    TranslationCase,
    run_strategy,
    select_one_shot_example,
)
from .llm.refine import DEFAULT_MAX_ITERS, STRATEGIES
from .metrics import DEFAULT_K, DEFAULT_N_MAX, MetricError
from .mining import (
    FileHistoryClient,
    MiningError,
    TranslationRecord,
    aggregate_effort,
    effort_metrics,
    extract_record,
)
from .registry import ActionRegistry, RegistryError, load_package_table
from .report import (
    CaseResult,
    Report,
    ReportError,
    context_for_source,
    render_text,
    score_corpus,
    shared_for_targets,
    similarity,
)
from .transpiler import TranspileError, TranspileOptions, transpile_text

log = logging.getLogger("ci_porter")

EXIT_OK = 0
EXIT_BLOCKING = 1
EXIT_USAGE = 2

_INPUT_ERRORS = (OSError, ValueError, YamlParseError, TravisParseError, EmptyConfigError,
                 TranspileError, RenderError, RegistryError, MiningError, ReportError, MetricError)


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path: Optional[str], text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def read_jsonl(path: str) -> list[dict]:
    rows = []
    for n, line in enumerate(_read(path).splitlines(), 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{n}: invalid JSON: {exc.msg}") from None
        if not isinstance(row, dict):
            raise InputError(f"{path}:{n}: expected a JSON object")
        rows.append(row)
    return rows


def _cases(path: str) -> list[TranslationCase]:
    cases = []
    for row in read_jsonl(path):
        case_id = row.get("id", row.get("case_id"))
        if case_id is None or "source_text" not in row:
            raise InputError(f"{path}: every record needs an id and source_text")
        cases.append(TranslationCase(str(case_id), row["source_text"], row.get("target_text")))
    return cases


def _context(args) -> LintContext:
    kwargs = {}
    if getattr(args, "secrets", None):
        kwargs["available_secrets"] = frozenset(s.strip() for s in args.secrets.split(",") if s.strip())
    if getattr(args, "registry", None):
        kwargs["action_registry"] = ActionRegistry.load(args.registry)
    if getattr(args, "packages", None):
        kwargs["package_table"] = load_package_table(args.packages)
    return LintContext(**kwargs)


# --- subcommands -----------------------------------------------------------------


def cmd_transpile(args) -> int:
    opts_kw = {"strict_arch": args.strict_arch}
    if args.registry:
        opts_kw["action_registry"] = ActionRegistry.load(args.registry)
    if args.packages:
        opts_kw["package_table"] = load_package_table(args.packages)
    text, warnings = transpile_text(_read(args.source), TranspileOptions(**opts_kw))
    for w in warnings:
        print(f"warning: {w.code}: {w.detail}" + (f" ({w.source_path})" if w.source_path else ""),
              file=sys.stderr)
    _write(args.out, text)
    return EXIT_OK


def cmd_lint(args) -> int:
    ctx = _context(args)
    if args.source:
        ctx = replace(ctx, source=parse_travis(_read(args.source)))
    issues = lint(_read(args.candidate), ctx)
    if args.format == "json":
        payload = {
            "candidate": args.candidate,
            "logic_checked": ctx.source is not None,
            "issues": [i.to_dict() for i in issues],
        }
        _write(args.out, json.dumps(payload, indent=2) + "\n")
    else:
        lines = [i.render() for i in issues] or ["no issues found"]
        if ctx.source is None:
            lines.append("(logic checks skipped: no --source given)")
        _write(args.out, "\n".join(lines) + "\n")
    return EXIT_BLOCKING if any(i.blocking for i in issues) else EXIT_OK


def _candidates(path: str) -> dict[str, str]:
    p = Path(path)
    if p.is_dir():
        return {f.stem: f.read_text(encoding="utf-8")
                for f in sorted(p.iterdir()) if f.suffix in (".yml", ".yaml")}
    out = {}
    for row in read_jsonl(path):
        case_id = row.get("id", row.get("case_id"))
        text = row.get("candidate_text", row.get("text"))
        if case_id is None or text is None:
            raise InputError(f"{path}: candidate rows need id and candidate_text")
        out[str(case_id)] = text
    return out


def _emit_report(args, report: Report) -> None:
    data = report.to_dict()
    _write(args.out, json.dumps(data, indent=2) + "\n" if args.format == "json" else render_text(data))


def cmd_score(args) -> int:
    records = read_jsonl(args.records)
    report = score_corpus(records, _candidates(args.candidate), _context(args), n_max=args.cb_n_max,
                          k=args.cb_k, workers=args.workers)
    _emit_report(args, report)
    return EXIT_OK


def _provider(args):
    if args.provider == "mock":
        if not args.mock_dir:
            raise InputError("--provider mock needs --mock-dir")
        if not Path(args.mock_dir).is_dir():
            raise InputError(f"mock directory {args.mock_dir} does not exist")
        return MockProvider(args.mock_dir)
    try:
        return HttpProvider.from_env()
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_refine(args) -> int:
    cases = _cases(args.records)
    if not cases:
        raise InputError(f"{args.records} holds no records")
    base = _context(args)
    guidelines = GuidelineSet.load(args.guidelines).render() if args.guidelines else None

    def prompt_context(case):
        context = {}
        if guidelines:
            context["GUIDELINES"] = guidelines
        if args.strategy == "one-shot":
            pool = [c for c in cases if c.case_id != case.case_id and c.target_text]
            if not pool:
                raise InputError("one-shot prompting needs another record with a target to use as example")
            example = select_one_shot_example(case.source_text, pool)
            context["EXAMPLE_SOURCE"] = example.source_text
            context["EXAMPLE_TARGET"] = example.target_text
        return context

    contexts = {c.case_id: context_for_source(c.source_text, base) for c in cases}
    build = SimulatedBuild(lambda case: contexts[case.case_id])
    result = run_strategy(args.strategy, cases, _provider(args), build, args.max_iters,
                          context_for=prompt_context, workers=args.workers)
    shared = shared_for_targets((c.target_text for c in cases), args.cb_n_max, args.cb_k)
    results = []
    for case in cases:
        state = result[case.case_id]
        text = state.current_text
        issues = tuple(lint(text, contexts[case.case_id])) if text.strip() else ()
        cs, cb = similarity(text, case.target_text, shared)
        results.append(CaseResult(case.case_id, issues, state.last_outcome, cs, cb, tuple(state.trace)))
    report = Report.build(results, strategy=args.strategy, iterations_run=result.iterations_run,
                          provider_calls=result.provider_calls,
                          fixed_per_iteration=[len(s) for s in result.fixed_history],
                          status={cid: s.status for cid, s in result.items()})
    _emit_report(args, report)
    return EXIT_OK


def _repos(root: Path) -> list[tuple[str, Path]]:
    if (root / "history.jsonl").is_file():
        return [(root.name, root.parent)]
    return [(d.name, root) for d in sorted(root.iterdir()) if (d / "history.jsonl").is_file()]


def cmd_mine(args) -> int:
    root = Path(args.history)
    if not root.is_dir():
        raise InputError(f"history directory {root} does not exist")
    repos = _repos(root)
    if not repos:
        raise InputError(f"no history.jsonl found under {root}")

    def one(repo):
        name, parent = repo
        client = FileHistoryClient(parent)
        return name, extract_record(client.history(name), client.blobs(name), record_id=name)

    if args.workers > 1 and len(repos) > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            found = list(pool.map(one, repos))
    else:
        found = [one(r) for r in repos]
    lines = []
    for name, record in found:
        if record is None:
            log.info("%s: no one-to-one migration found", name)
        else:
            lines.append(json.dumps(record.to_dict()))
    print(f"{len(lines)} record(s) from {len(repos)} repositor{'y' if len(repos) == 1 else 'ies'}",
          file=sys.stderr)
    _write(args.out, "".join(line + "\n" for line in lines))
    return EXIT_OK


def cmd_effort(args) -> int:
    records = [TranslationRecord.from_dict(row) for row in read_jsonl(args.records)]
    reports = [effort_metrics(r) for r in records]
    summary = aggregate_effort(reports)
    if args.format == "json":
        payload = {"records": [dict(id=r.id, **e.to_dict()) for r, e in zip(records, reports)],
                   "summary": summary}
        _write(args.out, json.dumps(payload, indent=2) + "\n")
    else:
        out = [f"{k}: {v}" for k, v in summary.items()]
        _write(args.out, "\n".join(out) + "\n")
    return EXIT_OK


# --- parser ------------------------------------------------------------------------


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def _non_negative(value: str) -> int:
    n = int(value)
    if n < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ci-porter",
                                     description="Translate, lint and evaluate CI configurations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="{transpile,lint,score,refine,mine,effort}")
    sub.required = True

    def common(p, fmt=True, out=True):
        if fmt:
            p.add_argument("--format", choices=("json", "text"), default="text")
        if out:
            p.add_argument("--out", help="output file (default: standard output)")

    def cb_flags(p):
        p.add_argument("--cb-n-max", type=_positive, default=DEFAULT_N_MAX, help="CrystalBLEU max n-gram order")
        p.add_argument("--cb-k", type=_non_negative, default=DEFAULT_K,
                       help="CrystalBLEU shared n-grams per order; lower it for small corpora")

    def ctx_flags(p):
        p.add_argument("--secrets", help="comma-separated secret names available to the workflow")
        p.add_argument("--registry", help="action registry YAML overriding the bundled one")
        p.add_argument("--packages", help="package table YAML overriding the bundled one")

    p = sub.add_parser("transpile", help="rule-based Travis CI to GitHub Actions translation")
    p.add_argument("--source", required=True, help=".travis.yml to translate")
    p.add_argument("--strict-arch", action="store_true", help="fail on unsupported architectures")
    p.add_argument("--registry")
    p.add_argument("--packages")
    common(p, fmt=False)
    p.set_defaults(func=cmd_transpile)

    p = sub.add_parser("lint", help="detect taxonomy issues in a workflow")
    p.add_argument("--candidate", required=True, help="workflow file to lint")
    p.add_argument("--source", help="original .travis.yml, enables logic checks")
    ctx_flags(p)
    common(p)
    p.set_defaults(func=cmd_lint)

    p = sub.add_parser("score", help="build, similarity and issue report for a corpus")
    p.add_argument("--records", required=True, help="JSONL records with id, source_text, target_text")
    p.add_argument("--candidate", required=True,
                   help="directory of <id>.yml candidates or JSONL with id and candidate_text")
    p.add_argument("--workers", type=_positive, default=1)
    cb_flags(p)
    ctx_flags(p)
    common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("refine", help="LLM translation with optional iterative refinement")
    p.add_argument("--records", required=True)
    p.add_argument("--strategy", choices=tuple(STRATEGIES), default="guideline-ir")
    p.add_argument("--max-iters", type=_positive, default=DEFAULT_MAX_ITERS)
    p.add_argument("--provider", choices=("mock", "http"), default="mock")
    p.add_argument("--mock-dir")
    p.add_argument("--guidelines", help="guideline YAML overriding the bundled rules")
    p.add_argument("--workers", type=_positive, default=1)
    cb_flags(p)
    ctx_flags(p)
    common(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("mine", help="extract one-to-one migration records from history fixtures")
    p.add_argument("--history", required=True,
                   help="repository directory with history.jsonl and blobs/, or a directory of them")
    p.add_argument("--workers", type=_positive, default=1)
    common(p, fmt=False)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("effort", help="migration effort metrics for mined records")
    p.add_argument("--records", required=True)
    common(p)
    p.set_defaults(func=cmd_effort)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except _INPUT_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_USAGE


def main() -> None:
    sys.exit(run())
