"""Workspace persistence: plain line-delimited JSON files under one root.

Layout:

    meta.json                     schema version + project reference
    issues.jsonl                  one Issue per line, sorted by iid
    reviews.jsonl                 one Review per line, sorted by id
    links.jsonl                   append-only log of gold links and triage decisions
    embeddings/<provider>.jsonl   one vector per record, sorted, with text-hash guards
    cache/translations.jsonl      translation cache (see enrich.TranslationCache)
    reports/                      evaluation reports (latest.json + per provider)

Files are small enough that full rewrites are cheap; every rewrite goes
through a temp file + atomic rename. One writer at a time per workspace,
enforced with a lock file; readers need no lock.
"""

from __future__ import annotations

import json
import os
import re
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from filelock import FileLock

from .errors import (
    CrowdMatchError,
    SchemaVersionMismatch,
    UnknownIssue,
    UnknownReview,
    WorkspaceError,
)
from .hashing import text_hash
from .model import GoldLink, Issue, LinkOrigin, Review, TriageDecision, TriageKind, utc_now
from .providers import EmbeddingProvider

SCHEMA_VERSION = 1

_UNSAFE_FILENAME = re.compile(r"[^A-Za-z0-9._-]")


def review_id_for_text(text: str) -> str:
    """Deterministic review id for ad-hoc text (imports without id, triage input)."""
    return f"r-{text_hash(text)}"


def provider_filename(provider_id: str) -> str:
    return _UNSAFE_FILENAME.sub("_", provider_id) + ".jsonl"


@dataclass(frozen=True)
class EmbeddingRecord:
    """One stored vector. `key` is the issue iid (as string) or the review id."""

    kind: str  # "issue" | "review"
    key: str
    provider_id: str
    dim: int
    text_hash: str
    values: tuple[float, ...]

    def sort_key(self) -> tuple[str, tuple]:
        if self.kind == "issue":
            return (self.kind, (0, int(self.key)))
        return (self.kind, (1, self.key))

    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "key": self.key,
            "provider_id": self.provider_id,
            "dim": self.dim,
            "text_hash": self.text_hash,
            "values": list(self.values),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EmbeddingRecord":
        return cls(
            kind=rec["kind"],
            key=rec["key"],
            provider_id=rec["provider_id"],
            dim=int(rec["dim"]),
            text_hash=rec["text_hash"],
            values=tuple(float(v) for v in rec["values"]),
        )


@dataclass
class UpsertReport:
    """Outcome of an embedding upsert: how many were written, skipped, failed."""

    embedded: int = 0
    skipped: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)  # (key, error message)


def _write_jsonl_atomic(path: Path, records: Iterable[dict]) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    os.replace(tmp, path)


def _read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        return []
    out = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


class Workspace:
    """A single-project corpus rooted at one directory."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self._write_mutex = threading.RLock()
        self._file_lock = FileLock(str(self.root / ".crowdmatch.lock"))

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def init(cls, root: Path, project: Optional[str] = None) -> "Workspace":
        """Open an existing workspace or create a fresh one."""
        root = Path(root)
        meta_path = root / "meta.json"
        if meta_path.exists():
            ws = cls(root)
            ws._check_schema()
            return ws
        root.mkdir(parents=True, exist_ok=True)
        meta = {
            "schema_version": SCHEMA_VERSION,
            "project": project,
            "created_at": utc_now().isoformat(),
        }
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return cls(root)

    @classmethod
    def open(cls, root: Path) -> "Workspace":
        root = Path(root)
        if not (root / "meta.json").exists():
            raise WorkspaceError(f"no workspace at {root} (missing meta.json)")
        ws = cls(root)
        ws._check_schema()
        return ws

    def _check_schema(self) -> None:
        meta = json.loads((self.root / "meta.json").read_text(encoding="utf-8"))
        found = meta.get("schema_version")
        if found != SCHEMA_VERSION:
            raise SchemaVersionMismatch(
                f"workspace schema {found} not supported (expected {SCHEMA_VERSION})"
            )

    @property
    def meta(self) -> dict:
        return json.loads((self.root / "meta.json").read_text(encoding="utf-8"))

    @contextmanager
    def writer(self):
        """Single-writer guard: in-process mutex plus a cross-process lock file."""
        with self._write_mutex:
            with self._file_lock:
                yield

    # -- issues --------------------------------------------------------------

    @property
    def issues_path(self) -> Path:
        return self.root / "issues.jsonl"

    def load_issues(self) -> dict[int, Issue]:
        issues = {}
        for rec in _read_jsonl(self.issues_path):
            issue = Issue.from_record(rec)
            issues[issue.iid] = issue
        return issues

    def upsert_issues(self, issues: Iterable[Issue]) -> int:
        """Insert or replace issues by iid; returns how many records changed."""
        with self.writer():
            existing = self.load_issues()
            changed = 0
            for issue in issues:
                if existing.get(issue.iid) != issue:
                    changed += 1
                existing[issue.iid] = issue
            _write_jsonl_atomic(
                self.issues_path,
                (existing[iid].to_record() for iid in sorted(existing)),
            )
        return changed

    # -- reviews -------------------------------------------------------------

    @property
    def reviews_path(self) -> Path:
        return self.root / "reviews.jsonl"

    def load_reviews(self) -> dict[str, Review]:
        reviews = {}
        for rec in _read_jsonl(self.reviews_path):
            review = Review.from_record(rec)
            reviews[review.id] = review
        return reviews

    def add_reviews(self, reviews: Iterable[Review], links: Iterable[GoldLink] = ()) -> int:
        """Store reviews (replacing same-id records) and any gold links, atomically."""
        reviews = list(reviews)
        links = list(links)
        with self.writer():
            existing = self.load_reviews()
            for review in reviews:
                existing[review.id] = review
            _write_jsonl_atomic(
                self.reviews_path,
                (existing[rid].to_record() for rid in sorted(existing)),
            )
            for link in links:
                self._append_gold_link(link)
        return len(reviews)

    def save_review(self, review: Review) -> None:
        self.add_reviews([review])

    # -- links (gold + triage) ------------------------------------------------

    @property
    def links_path(self) -> Path:
        return self.root / "links.jsonl"

    def load_links(self) -> tuple[list[GoldLink], list[TriageDecision]]:
        gold: list[GoldLink] = []
        triage: list[TriageDecision] = []
        for rec in _read_jsonl(self.links_path):
            if rec.get("kind") == "gold":
                gold.append(GoldLink.from_record(rec))
            elif rec.get("kind") == "triage":
                triage.append(TriageDecision.from_record(rec))
            else:
                raise WorkspaceError(f"unknown link record kind {rec.get('kind')!r}")
        return gold, triage

    def gold_links(self) -> dict[str, GoldLink]:
        """At most one gold link per review; the earliest stored one wins."""
        by_review: dict[str, GoldLink] = {}
        for link in self.load_links()[0]:
            by_review.setdefault(link.review_id, link)
        return by_review

    def _append_link_record(self, rec: dict) -> None:
        with self.links_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")

    def _append_gold_link(self, link: GoldLink) -> bool:
        if link.review_id in self.gold_links():
            return False
        self._append_link_record(link.to_record())
        return True

    def record_triage(self, decision: TriageDecision) -> TriageDecision:
        """Append a triage decision; a 'linked' decision also creates a gold link."""
        with self.writer():
            if decision.review_id not in self.load_reviews():
                raise UnknownReview(f"no review {decision.review_id!r} in workspace")
            if decision.decision is TriageKind.LINKED:
                if decision.issue_iid not in self.load_issues():
                    raise UnknownIssue(f"no issue {decision.issue_iid} in workspace")
            self._append_link_record(decision.to_record())
            if decision.decision is TriageKind.LINKED:
                self._append_gold_link(
                    GoldLink(
                        review_id=decision.review_id,
                        issue_iid=decision.issue_iid,
                        origin=LinkOrigin.TRIAGE,
                        decided_at=decision.decided_at,
                    )
                )
        return decision

    # -- embeddings ------------------------------------------------------------

    @property
    def embeddings_dir(self) -> Path:
        return self.root / "embeddings"

    def embeddings_path(self, provider_id: str) -> Path:
        return self.embeddings_dir / provider_filename(provider_id)

    def load_embeddings(self, provider_id: str) -> dict[tuple[str, str], EmbeddingRecord]:
        records = {}
        for rec in _read_jsonl(self.embeddings_path(provider_id)):
            record = EmbeddingRecord.from_record(rec)
            if record.provider_id != provider_id:
                raise WorkspaceError(
                    f"embedding file for {provider_id!r} holds a {record.provider_id!r} record"
                )
            records[(record.kind, record.key)] = record
        return records

    def upsert_embeddings(self, provider: EmbeddingProvider, kind: str) -> UpsertReport:
        """Embed every issue/review lacking an up-to-date vector for this provider.

        A record is up to date when its stored text hash matches the current
        text; others are re-embedded. Per-record failures are reported and do
        not stop the rest.
        """
        if kind not in ("issue", "review"):
            raise ValueError(f"kind must be 'issue' or 'review', got {kind!r}")
        if kind == "issue":
            texts = {str(issue.iid): issue.embed_text for issue in self.load_issues().values()}
        else:
            texts = {review.id: review.embed_text for review in self.load_reviews().values()}

        report = UpsertReport()
        with self.writer():
            records = self.load_embeddings(provider.provider_id)
            for key in sorted(texts, key=lambda k: int(k) if kind == "issue" else k):
                text = texts[key]
                digest = text_hash(text)
                current = records.get((kind, key))
                if (
                    current is not None
                    and current.text_hash == digest
                    and current.dim == provider.dim
                ):
                    report.skipped += 1
                    continue
                try:
                    vector = provider.embed(text)
                except CrowdMatchError as exc:
                    report.failures.append((key, str(exc)))
                    continue
                records[(kind, key)] = EmbeddingRecord(
                    kind=kind,
                    key=key,
                    provider_id=provider.provider_id,
                    dim=vector.dim,
                    text_hash=digest,
                    values=vector.values,
                )
                report.embedded += 1
            self.embeddings_dir.mkdir(parents=True, exist_ok=True)
            ordered = sorted(records.values(), key=EmbeddingRecord.sort_key)
            _write_jsonl_atomic(
                self.embeddings_path(provider.provider_id),
                (r.to_record() for r in ordered),
            )
        return report

    def embedding_counts(self) -> dict[str, dict[str, int]]:
        counts: dict[str, dict[str, int]] = {}
        if not self.embeddings_dir.exists():
            return counts
        for path in sorted(self.embeddings_dir.glob("*.jsonl")):
            per_kind: dict[str, int] = {}
            provider_id = None
            for rec in _read_jsonl(path):
                provider_id = rec["provider_id"]
                per_kind[rec["kind"]] = per_kind.get(rec["kind"], 0) + 1
            if provider_id is not None:
                counts[provider_id] = per_kind
        return counts

    # -- reports / stats ---------------------------------------------------------

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    def save_eval_report(self, report: dict, provider_id: str) -> Path:
        with self.writer():
            self.reports_dir.mkdir(parents=True, exist_ok=True)
            payload = json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True) + "\n"
            named = self.reports_dir / f"eval-{_UNSAFE_FILENAME.sub('_', provider_id)}.json"
            named.write_text(payload, encoding="utf-8")
            (self.reports_dir / "latest.json").write_text(payload, encoding="utf-8")
        return named

    def latest_eval_report(self) -> Optional[dict]:
        path = self.reports_dir / "latest.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def stats(self) -> dict:
        return {
            "issues": len(self.load_issues()),
            "reviews": len(self.load_reviews()),
            "gold_links": len(self.gold_links()),
            "embeddings": self.embedding_counts(),
        }

    def translation_cache_path(self) -> Path:
        return self.root / "cache" / "translations.jsonl"
