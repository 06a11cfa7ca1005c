import random
from datetime import datetime, timedelta, timezone

import pytest

from ci_porter.mining import (
    CommitInfo,
    DictBlobs,
    EffortReport,
    FileChange,
    FileHistoryClient,
    MiningError,
    MissingBlobError,
    TranslationRecord,
    aggregate_effort,
    effort_metrics,
    extract_record,
    histogram,
    is_migration_commit,
    line_count,
    load_history,
    migration_matches,
    parse_timestamp,
    SIZE_BUCKETS,
)
from tests.conftest import FIXTURES

SAMPLE = FIXTURES / "history" / "sample"
T0 = datetime(2023, 3, 1, tzinfo=timezone.utc)


def commit(sha, message, *changes, day=0):
    return CommitInfo(sha, message, T0 + timedelta(days=day), tuple(FileChange(*c) for c in changes))


# --- message patterns -------------------------------------------------------------


@pytest.mark.parametrize("message,expected", [
    ("Migrate CI from Travis to GitHub Actions", True),
    ("Fix flaky test", False),
    ("switch to travis alternatives", True),
    ("REPLACE TRAVIS", True),
    ("Travis: migrate to actions", False),
    ("travis ci replaced", False),
    ("", False),
])
def test_is_migration_commit(message, expected):
    assert is_migration_commit(message) is expected


def test_patterns_search_inside_words():
    # the match is unanchored, so "remove" contains "move"
    assert is_migration_commit("Remove .travis.yml")


# --- fixture history -------------------------------------------------------------


def test_sample_history_matches():
    history = load_history(SAMPLE / "history.jsonl")
    assert len(history) == 12
    assert [c.sha for c in migration_matches(history)] == ["c03", "c06", "c10"]


def test_sample_record_and_effort():
    client = FileHistoryClient(SAMPLE.parent)
    record = extract_record(client.history("sample"), client.blobs("sample"))
    assert record.migration_commit == "c06"
    assert record.workflow_path == ".github/workflows/ci.yml"
    assert [c.sha for c in record.follow_up_commits] == ["c07", "c09"]
    report = effort_metrics(record)
    assert report.attempts == 3
    assert report.change_sizes == ((12, 7), (12, 7))
    assert report.source_size == 38
    assert report.duration_days == pytest.approx(3.5)


def test_record_roundtrip():
    client = FileHistoryClient(SAMPLE.parent)
    record = extract_record(client.history("sample"), client.blobs("sample"))
    assert TranslationRecord.from_dict(record.to_dict()) == record


# --- extraction -------------------------------------------------------------------

TRAVIS = ("t1", ".travis.yml", "added", 3, 0, "travis")
BLOBS = DictBlobs({"travis": "language: python\n", "wf": "on: push\n", "wf2": "on: [push]\n"})


def test_two_workflows_is_not_one_to_one():
    history = [
        commit("t1", "init", TRAVIS[1:]),
        commit("m", "Migrate from travis",
               (".github/workflows/a.yml", "added", 1, 0, "wf"),
               (".github/workflows/b.yml", "added", 1, 0, "wf2"), day=1),
    ]
    assert extract_record(history, BLOBS) is None


def test_no_matching_message():
    history = [commit("t1", "init", TRAVIS[1:]),
               commit("m", "Add CI", (".github/workflows/a.yml", "added", 1, 0, "wf"), day=1)]
    assert extract_record(history, BLOBS) is None


def test_needs_travis_file():
    history = [commit("m", "Migrate travis", (".github/workflows/a.yml", "added", 1, 0, "wf"))]
    assert extract_record(history, BLOBS) is None
    removed = [commit("t1", "init", TRAVIS[1:]),
               commit("t2", "drop", (".travis.yml", "removed", 0, 3, None), day=1),
               commit("m", "Migrate travis", (".github/workflows/a.yml", "added", 1, 0, "wf"), day=2)]
    assert extract_record(removed, BLOBS) is None


def test_target_is_last_follow_up():
    history = [
        commit("t1", "init", TRAVIS[1:]),
        commit("m", "Migrate travis", (".github/workflows/a.yml", "added", 1, 0, "wf"), day=1),
        commit("f", "fix", (".github/workflows/a.yml", "modified", 1, 1, "wf2"), day=2),
    ]
    record = extract_record(history, BLOBS, record_id="r1")
    assert record.id == "r1" and record.target_text == "on: [push]\n"
    assert record.source_text == "language: python\n"


def test_missing_blob_names_sha():
    history = [commit("t1", "init", (".travis.yml", "added", 3, 0, "nope")),
               commit("m9", "Migrate travis", (".github/workflows/a.yml", "added", 1, 0, "wf"), day=1)]
    with pytest.raises(MissingBlobError, match="t1"):
        extract_record(history, BLOBS)


def test_change_validation():
    with pytest.raises(ValueError):
        FileChange("x", "renamed", 0, 0)
    with pytest.raises(ValueError):
        FileChange("x", "added", -1, 0)


def test_parse_timestamp_forms():
    assert parse_timestamp("2023-03-01T00:00:00Z") == T0
    assert parse_timestamp(int(T0.timestamp())) == T0


# --- effort -----------------------------------------------------------------------


def test_effort_single_commit():
    record = TranslationRecord("r", "x\n" * 38, "y\n" * 58, "m")
    report = effort_metrics(record)
    assert (report.source_size, report.target_size, report.attempts, report.change_sizes) == (38, 58, 1, ())


def test_line_count_counts_blank_and_comment_lines():
    assert line_count("a: 1\n\n# note\nb: 2\n") == 4


def test_report_invariants():
    with pytest.raises(ValueError):
        EffortReport(1, 1, 0)
    with pytest.raises(ValueError):
        EffortReport(1, 1, 2, ())


def test_aggregate_examples():
    one = EffortReport(38, 58, 1)
    summary = aggregate_effort([one])
    assert summary["mean_source_size"] == 38 and summary["mean_target_size"] == 58
    assert summary["multi_commit_fraction"] == 0.0
    three = EffortReport(10, 20, 3, ((12, 7), (12, 7)), 2.0)
    both = aggregate_effort([one, three])
    assert both["multi_commit_fraction"] == 0.5 and both["three_plus_fraction"] == 0.5
    assert both["mean_added_per_commit"] == 12 and both["mean_deleted_per_commit"] == 7
    assert both["attempts_histogram"] == {"1": 1, "2": 0, "3": 1, "4": 0, "5+": 0}
    with pytest.raises(MiningError):
        aggregate_effort([])


def test_histogram_bucket_edges():
    assert histogram([1, 30, 31, 120, 121, 500], SIZE_BUCKETS) == {
        "1-30": 2, "31-60": 1, "61-90": 0, "91-120": 1, ">120": 2}


def test_synthetic_corpus_matches_stated_means():
    # 811 records, 387 of them multi-commit; sizes scattered around 38 and 58
    rng = random.Random(811)
    multi = set(rng.sample(range(811), 387))
    sources, targets, reports = [], [], []
    for i in range(811):
        attempts = rng.randint(2, 6) if i in multi else 1
        s, t = max(1, round(rng.gauss(38, 12))), max(1, round(rng.gauss(58, 18)))
        sources.append(s)
        targets.append(t)
        reports.append(EffortReport(s, t, attempts, tuple((12, 7) for _ in range(attempts - 1))))
    summary = aggregate_effort(reports)
    assert summary["records"] == 811
    assert round(summary["multi_commit_fraction"], 3) == 0.477
    assert summary["mean_source_size"] == pytest.approx(sum(sources) / 811)
    assert abs(summary["mean_source_size"] - 38) < 2 and abs(summary["mean_target_size"] - 58) < 3
