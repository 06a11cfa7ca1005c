"""Find Travis -> GitHub Actions migrations in commit histories and measure
the effort they took.

History fixtures are JSON Lines, one commit per line::

    {"sha", "message", "timestamp", "files": [{"path", "kind", "added", "deleted", "blob_ref"}]}

with file contents stored under a blobs directory keyed by ``blob_ref``.
"""
from __future__ import annotations

import json
import re
import statistics
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Optional, Protocol, Sequence

MIGRATION_PATTERNS = tuple(
    re.compile(p, re.IGNORECASE)
    for p in (r"migrate.*travis", r"move.*travis", r"replace.*travis", r"switch.*travis")
)
TRAVIS_FILE = ".travis.yml"
WORKFLOW_DIR = ".github/workflows/"

SIZE_BUCKETS = ((1, 30), (31, 60), (61, 90), (91, 120), (121, None))
ATTEMPT_BUCKETS = ((1, 1), (2, 2), (3, 3), (4, 4), (5, None, "5+"))


class MiningError(ValueError):
    pass


class MissingBlobError(MiningError):
    def __init__(self, sha: str, path: str, blob_ref: Optional[str]):
        super().__init__(f"no content for {path} at {sha} (blob {blob_ref!r})")
        self.sha, self.path, self.blob_ref = sha, path, blob_ref


@dataclass(frozen=True)
class FileChange:
    path: str
    kind: str  # added | removed | modified
    added: int = 0
    deleted: int = 0
    blob_ref: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("added", "removed", "modified"):
            raise ValueError(f"unknown change kind {self.kind!r}")
        if self.added < 0 or self.deleted < 0:
            raise ValueError("line counts must be non-negative")


@dataclass(frozen=True)
class CommitInfo:
    sha: str
    message: str
    timestamp: datetime
    file_changes: tuple[FileChange, ...] = ()

    @classmethod
    def from_dict(cls, data: Mapping) -> "CommitInfo":
        return cls(
            sha=str(data["sha"]),
            message=str(data.get("message", "")),
            timestamp=parse_timestamp(data.get("timestamp")),
            file_changes=tuple(
                FileChange(str(f["path"]), str(f.get("kind", "modified")), int(f.get("added", 0)),
                           int(f.get("deleted", 0)), f.get("blob_ref"))
                for f in data.get("files", ())
            ),
        )

    def to_dict(self) -> dict:
        return {
            "sha": self.sha,
            "message": self.message,
            "timestamp": self.timestamp.isoformat(),
            "files": [
                {"path": f.path, "kind": f.kind, "added": f.added, "deleted": f.deleted, "blob_ref": f.blob_ref}
                for f in self.file_changes
            ],
        }


def parse_timestamp(value) -> datetime:
    if isinstance(value, datetime):
        ts = value
    elif isinstance(value, (int, float)):
        ts = datetime.fromtimestamp(value, tz=timezone.utc)
    elif isinstance(value, str):
        ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    else:
        raise MiningError(f"bad timestamp {value!r}")
    return ts if ts.tzinfo else ts.replace(tzinfo=timezone.utc)


class BlobStore(Protocol):
    def get(self, blob_ref: str) -> Optional[str]: ...


class DirectoryBlobs:
    """Blobs stored as files named by their blob_ref."""

    def __init__(self, root):
        self.root = Path(root)

    def get(self, blob_ref: str) -> Optional[str]:
        if not blob_ref:
            return None
        path = self.root / blob_ref
        if not path.is_file():
            return None
        return path.read_text(encoding="utf-8")


class DictBlobs:
    def __init__(self, blobs: Mapping[str, str]):
        self.blobs = dict(blobs)

    def get(self, blob_ref: str) -> Optional[str]:
        return self.blobs.get(blob_ref)


class HistoryClient(Protocol):
    """Source of commit histories; only the file-backed client ships."""

    def history(self, repo: str) -> list[CommitInfo]: ...


def load_history(path) -> list[CommitInfo]:
    commits = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if line.strip():
            try:
                commits.append(CommitInfo.from_dict(json.loads(line)))
            except (KeyError, ValueError) as exc:
                raise MiningError(f"{path}:{n}: {exc}") from exc
    return commits


class FileHistoryClient:
    """``<root>/<repo>/history.jsonl`` plus ``<root>/<repo>/blobs/``."""

    def __init__(self, root):
        self.root = Path(root)

    def history(self, repo: str) -> list[CommitInfo]:
        return load_history(self.root / repo / "history.jsonl")

    def blobs(self, repo: str) -> DirectoryBlobs:
        return DirectoryBlobs(self.root / repo / "blobs")


@dataclass(frozen=True)
class TranslationRecord:
    id: str
    source_text: str
    target_text: str
    migration_commit: str
    follow_up_commits: tuple[CommitInfo, ...] = ()
    workflow_path: str = ""
    migration_timestamp: Optional[datetime] = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source_text": self.source_text,
            "target_text": self.target_text,
            "migration_commit": self.migration_commit,
            "follow_up_commits": [c.to_dict() for c in self.follow_up_commits],
            "workflow_path": self.workflow_path,
            "migration_timestamp": self.migration_timestamp.isoformat() if self.migration_timestamp else None,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TranslationRecord":
        ts = data.get("migration_timestamp")
        return cls(
            id=str(data["id"]),
            source_text=str(data["source_text"]),
            target_text=str(data.get("target_text") or ""),
            migration_commit=str(data.get("migration_commit", "")),
            follow_up_commits=tuple(CommitInfo.from_dict(c) for c in data.get("follow_up_commits", ())),
            workflow_path=str(data.get("workflow_path", "")),
            migration_timestamp=parse_timestamp(ts) if ts else None,
        )


def is_migration_commit(message: str) -> bool:
    return any(p.search(message or "") for p in MIGRATION_PATTERNS)


def _is_workflow(path: str) -> bool:
    return path.startswith(WORKFLOW_DIR) and path.endswith((".yml", ".yaml"))


def _content(blobs: BlobStore, commit: CommitInfo, change: FileChange) -> str:
    text = blobs.get(change.blob_ref) if change.blob_ref else None
    if text is None:
        raise MissingBlobError(commit.sha, change.path, change.blob_ref)
    return text


def extract_record(history: Sequence[CommitInfo], blobs: BlobStore,
                   record_id: Optional[str] = None) -> Optional[TranslationRecord]:
    """One-to-one record from a chronological history, or None.

    The migration commit is the first commit whose message matches a
    migration pattern and which adds a workflow file; adding more than one
    workflow file there breaks the one-to-one rule.  The target is the
    workflow as of its last follow-up commit in the supplied window.
    """
    travis: Optional[tuple[CommitInfo, FileChange]] = None
    for index, commit in enumerate(history):
        added = [f for f in commit.file_changes if f.kind == "added" and _is_workflow(f.path)]
        if is_migration_commit(commit.message) and added:
            if len(added) != 1 or travis is None:
                return None
            workflow = added[0]
            follow_ups = tuple(
                c for c in history[index + 1:]
                if any(f.path == workflow.path and f.kind == "modified" for f in c.file_changes)
            )
            last_commit, last_change = commit, workflow
            for c in follow_ups:
                last_commit = c
                last_change = next(f for f in c.file_changes if f.path == workflow.path)
            return TranslationRecord(
                id=record_id or commit.sha,
                source_text=_content(blobs, *travis),
                target_text=_content(blobs, last_commit, last_change),
                migration_commit=commit.sha,
                follow_up_commits=follow_ups,
                workflow_path=workflow.path,
                migration_timestamp=commit.timestamp,
            )
        for change in commit.file_changes:
            if change.path == TRAVIS_FILE:
                travis = None if change.kind == "removed" else (commit, change)
    return None


def migration_matches(history: Iterable[CommitInfo]) -> list[CommitInfo]:
    return [c for c in history if is_migration_commit(c.message)]


# --- effort ------------------------------------------------------------------


def line_count(text: str) -> int:
    """Raw line count, blank and comment lines included."""
    return len(text.splitlines())


@dataclass(frozen=True)
class EffortReport:
    source_size: int
    target_size: int
    attempts: int
    change_sizes: tuple[tuple[int, int], ...] = ()
    duration_days: Optional[float] = None

    def __post_init__(self):
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")
        if len(self.change_sizes) != self.attempts - 1:
            raise ValueError("one change size per follow-up commit")

    def to_dict(self) -> dict:
        return {
            "source_size": self.source_size,
            "target_size": self.target_size,
            "attempts": self.attempts,
            "change_sizes": [list(c) for c in self.change_sizes],
            "duration_days": self.duration_days,
        }


def effort_metrics(record: TranslationRecord) -> EffortReport:
    changes = []
    for commit in record.follow_up_commits:
        change = next((f for f in commit.file_changes if f.path == record.workflow_path), None)
        if change is None and commit.file_changes:
            change = next((f for f in commit.file_changes if _is_workflow(f.path)), commit.file_changes[0])
        changes.append((change.added, change.deleted) if change else (0, 0))
    duration = None
    if record.follow_up_commits and record.migration_timestamp is not None:
        delta = record.follow_up_commits[-1].timestamp - record.migration_timestamp
        duration = delta.total_seconds() / 86400
    return EffortReport(
        source_size=line_count(record.source_text),
        target_size=line_count(record.target_text),
        attempts=1 + len(record.follow_up_commits),
        change_sizes=tuple(changes),
        duration_days=duration,
    )


def _bucket_label(low, high, label=None) -> str:
    if label:
        return label
    if high is None:
        return f">{low - 1}"
    return str(low) if low == high else f"{low}-{high}"


def histogram(values: Iterable[int], buckets) -> dict[str, int]:
    """Counts per bucket; a bucket is (low, high) or (low, high, label), high None = open."""
    counts = {_bucket_label(*b): 0 for b in buckets}
    for v in values:
        for b in buckets:
            lo, hi = b[0], b[1]
            if v >= lo and (hi is None or v <= hi):
                counts[_bucket_label(*b)] += 1
                break
    return counts


def aggregate_effort(reports: Sequence[EffortReport]) -> dict:
    if not reports:
        raise MiningError("no effort reports to aggregate")
    n = len(reports)
    changes = [c for r in reports for c in r.change_sizes]
    durations = [r.duration_days for r in reports if r.attempts > 1 and r.duration_days is not None]
    return {
        "records": n,
        "mean_source_size": statistics.fmean(r.source_size for r in reports),
        "mean_target_size": statistics.fmean(r.target_size for r in reports),
        "multi_commit_fraction": sum(r.attempts > 1 for r in reports) / n,
        "three_plus_fraction": sum(r.attempts >= 3 for r in reports) / n,
        "mean_added_per_commit": statistics.fmean(a for a, _ in changes) if changes else 0.0,
        "mean_deleted_per_commit": statistics.fmean(d for _, d in changes) if changes else 0.0,
        "mean_duration_days": statistics.fmean(durations) if durations else None,
        "source_size_histogram": histogram((r.source_size for r in reports), SIZE_BUCKETS),
        "target_size_histogram": histogram((r.target_size for r in reports), SIZE_BUCKETS),
        "attempts_histogram": histogram((r.attempts for r in reports), ATTEMPT_BUCKETS),
    }
