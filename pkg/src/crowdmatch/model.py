"""Domain records: reviews, issues, match candidates, gold links, triage decisions.

All types are immutable after construction and safe to share between threads.
Each record type knows how to (de)serialize itself to the plain-JSON shape
used by the workspace files, with optional fields omitted when absent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Optional


def utc_now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def parse_timestamp(raw: str) -> datetime:
    """Parse an ISO-8601 timestamp, normalizing to UTC."""
    ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat()


class ReviewClass(str, Enum):
    IRRELEVANT = "irrelevant"
    FEATURE_REQUEST = "feature_request"
    BUG_REPORT = "bug_report"


class IssueState(str, Enum):
    OPEN = "open"
    CLOSED = "closed"


@dataclass(frozen=True)
class Review:
    """One unit of user feedback."""

    id: str
    original_text: str
    original_lang: str
    translated_text: Optional[str] = None
    label: Optional[ReviewClass] = None
    source: str = ""
    created_at: datetime = field(default_factory=utc_now)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("review id must be non-empty")
        if not self.original_text.strip():
            raise ValueError("review text must be non-empty")
        if self.translated_text is not None and not self.translated_text.strip():
            raise ValueError("translated_text, when present, must be non-empty")

    @property
    def embed_text(self) -> str:
        """The text that gets embedded: the translation when there is one."""
        return self.translated_text if self.translated_text is not None else self.original_text

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "id": self.id,
            "original_text": self.original_text,
            "original_lang": self.original_lang,
            "source": self.source,
            "created_at": format_timestamp(self.created_at),
        }
        if self.translated_text is not None:
            rec["translated_text"] = self.translated_text
        if self.label is not None:
            rec["label"] = self.label.value
        return rec

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "Review":
        return cls(
            id=rec["id"],
            original_text=rec["original_text"],
            original_lang=rec["original_lang"],
            translated_text=rec.get("translated_text"),
            label=ReviewClass(rec["label"]) if "label" in rec else None,
            source=rec.get("source", ""),
            created_at=parse_timestamp(rec["created_at"]),
        )


@dataclass(frozen=True)
class Issue:
    """One tracker entry. Only the title (or its translation) is ever embedded."""

    iid: int
    title: str
    title_translated: Optional[str] = None
    description: Optional[str] = None
    labels: tuple[str, ...] = ()
    state: IssueState = IssueState.OPEN
    url: Optional[str] = None
    created_at: datetime = field(default_factory=utc_now)

    def __post_init__(self) -> None:
        if self.iid <= 0:
            raise ValueError(f"issue iid must be positive, got {self.iid}")
        if not self.title.strip():
            raise ValueError("issue title must be non-empty")

    @property
    def embed_text(self) -> str:
        return self.title_translated if self.title_translated is not None else self.title

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "iid": self.iid,
            "title": self.title,
            "labels": list(self.labels),
            "state": self.state.value,
            "created_at": format_timestamp(self.created_at),
        }
        if self.title_translated is not None:
            rec["title_translated"] = self.title_translated
        if self.description is not None:
            rec["description"] = self.description
        if self.url is not None:
            rec["url"] = self.url
        return rec

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "Issue":
        return cls(
            iid=int(rec["iid"]),
            title=rec["title"],
            title_translated=rec.get("title_translated"),
            description=rec.get("description"),
            labels=tuple(rec.get("labels", ())),
            state=IssueState(rec.get("state", "open")),
            url=rec.get("url"),
            created_at=parse_timestamp(rec["created_at"]),
        )


@dataclass(frozen=True)
class MatchCandidate:
    """One ranked (issue, similarity) suggestion; rank 1 is the best match."""

    issue_iid: int
    similarity: float
    rank: int

    def __post_init__(self) -> None:
        if self.issue_iid <= 0:
            raise ValueError("issue_iid must be positive")
        if not -1.0 <= self.similarity <= 1.0:
            raise ValueError(f"similarity {self.similarity} outside [-1, 1]")
        if self.rank <= 0:
            raise ValueError("rank must be positive")


class LinkOrigin(str, Enum):
    IMPORTED = "imported"
    TRIAGE = "triage"


@dataclass(frozen=True)
class GoldLink:
    """Human-asserted ground truth: this review refers to that issue."""

    review_id: str
    issue_iid: int
    origin: LinkOrigin = LinkOrigin.IMPORTED
    decided_at: datetime = field(default_factory=utc_now)

    def to_record(self) -> dict[str, Any]:
        return {
            "kind": "gold",
            "review_id": self.review_id,
            "issue_iid": self.issue_iid,
            "origin": self.origin.value,
            "decided_at": format_timestamp(self.decided_at),
        }

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "GoldLink":
        return cls(
            review_id=rec["review_id"],
            issue_iid=int(rec["issue_iid"]),
            origin=LinkOrigin(rec.get("origin", "imported")),
            decided_at=parse_timestamp(rec["decided_at"]),
        )


class TriageKind(str, Enum):
    LINKED = "linked"
    NEW_ISSUE_NEEDED = "new_issue"
    DISMISSED = "dismissed"


@dataclass(frozen=True)
class TriageDecision:
    """Outcome of a human looking at one review."""

    review_id: str
    decision: TriageKind
    issue_iid: Optional[int] = None
    decided_by: str = "unknown"
    decided_at: datetime = field(default_factory=utc_now)

    def __post_init__(self) -> None:
        if self.decision is TriageKind.LINKED and self.issue_iid is None:
            raise ValueError("a 'linked' decision needs an issue_iid")
        if self.decision is not TriageKind.LINKED and self.issue_iid is not None:
            raise ValueError(f"decision {self.decision.value!r} must not carry an issue_iid")

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "kind": "triage",
            "review_id": self.review_id,
            "decision": self.decision.value,
            "decided_by": self.decided_by,
            "decided_at": format_timestamp(self.decided_at),
        }
        if self.issue_iid is not None:
            rec["issue_iid"] = self.issue_iid
        return rec

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "TriageDecision":
        return cls(
            review_id=rec["review_id"],
            decision=TriageKind(rec["decision"]),
            issue_iid=int(rec["issue_iid"]) if "issue_iid" in rec else None,
            decided_by=rec.get("decided_by", "unknown"),
            decided_at=parse_timestamp(rec["decided_at"]),
        )
