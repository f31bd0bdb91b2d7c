"""File import of user reviews (CSV or JSONL) with optional gold issue links.

CSV contract: UTF-8, header row, columns id,text,lang,issue_iid. Only `text`
is mandatory per row; a missing id is autogenerated from the content hash,
a missing lang falls back to the import-wide default. Rows carrying an
issue_iid also produce a GoldLink with origin=imported.

Parsing is all-or-nothing: the first bad row aborts the import with its line
number and nothing is committed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import DuplicateId, ParseError
from .model import GoldLink, LinkOrigin, Review
from .workspace import Workspace, review_id_for_text


@dataclass(frozen=True)
class ImportReport:
    reviews: int
    gold_links: int


def _parse_iid(raw, line_no: int) -> Optional[int]:
    if raw is None or raw == "":
        return None
    try:
        iid = int(raw)
    except (TypeError, ValueError):
        raise ParseError(line_no, f"issue_iid {raw!r} is not an integer") from None
    if iid <= 0:
        raise ParseError(line_no, f"issue_iid must be positive, got {iid}")
    return iid


def _row_to_review(
    row: dict, line_no: int, default_lang: str, source: str
) -> tuple[Review, Optional[int]]:
    text = (row.get("text") or "").strip()
    if not text:
        raise ParseError(line_no, "missing or empty 'text'")
    review_id = (row.get("id") or "").strip() or review_id_for_text(text)
    lang = (row.get("lang") or "").strip() or default_lang
    iid = _parse_iid(row.get("issue_iid"), line_no)
    try:
        review = Review(id=review_id, original_text=text, original_lang=lang, source=source)
    except ValueError as exc:
        raise ParseError(line_no, str(exc)) from None
    return review, iid


def _parse_csv(path: Path, default_lang: str, source: str):
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return
        if "text" not in reader.fieldnames:
            raise ParseError(1, "header row must contain a 'text' column")
        for row in reader:
            # DictReader puts overflow columns under None; treat that as malformed.
            if None in row and row[None]:
                raise ParseError(reader.line_num, "row has more columns than the header")
            yield _row_to_review(row, reader.line_num, default_lang, source)


def _parse_jsonl(path: Path, default_lang: str, source: str):
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc.msg}") from None
            if not isinstance(row, dict):
                raise ParseError(line_no, "each line must be a JSON object")
            yield _row_to_review(row, line_no, default_lang, source)


def import_reviews(
    workspace: Workspace,
    path: Path,
    fmt: str = "csv",
    lang: str = "en",
) -> ImportReport:
    """Parse a review file and commit all rows at once.

    Returns how many reviews and gold links were stored. Duplicate ids inside
    the file, or clashing with a stored review of different content, raise
    DuplicateId. Re-importing an identical row is a no-op upsert.
    """
    path = Path(path)
    if fmt == "csv":
        rows = _parse_csv(path, lang, source=f"import:{path.name}")
    elif fmt == "jsonl":
        rows = _parse_jsonl(path, lang, source=f"import:{path.name}")
    else:
        raise ValueError(f"format must be 'csv' or 'jsonl', got {fmt!r}")

    reviews: list[Review] = []
    links: list[GoldLink] = []
    seen: dict[str, Review] = {}
    for review, iid in rows:
        if review.id in seen:
            raise DuplicateId(f"review id {review.id!r} appears twice in {path.name}")
        seen[review.id] = review
        reviews.append(review)
        if iid is not None:
            links.append(GoldLink(review_id=review.id, issue_iid=iid, origin=LinkOrigin.IMPORTED))

    existing = workspace.load_reviews()
    for review in reviews:
        prior = existing.get(review.id)
        if prior is not None and (
            prior.original_text != review.original_text
            or prior.original_lang != review.original_lang
        ):
            raise DuplicateId(
                f"review id {review.id!r} already stored with different content"
            )

    workspace.add_reviews(reviews, links)
    return ImportReport(reviews=len(reviews), gold_links=len(links))
