"""Tokenization with character spans, alignment of two tokenizations, and the
content-word filter used by the pooled embedding method.

Offsets are in Unicode scalar values of the *normalized* string (NFKC,
lowercased), never bytes of the original, so they are unambiguous across
encodings. Any two tokenizations being aligned must refer to that same
normalized string.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Protocol, Sequence

STOPWORDS_RESOURCE = "stopwords.txt"


@dataclass(frozen=True)
class TokenSpan:
    """A token plus its half-open [start, end) offsets in the normalized text."""

    text: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("token text must be non-empty")
        if not self.start < self.end:
            raise ValueError(f"bad span [{self.start}, {self.end})")

    def overlaps(self, other: "TokenSpan") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class AlignmentMap:
    """For each token position in sequence A, the B positions it overlaps.

    Entries are sorted and the whole mapping is monotone because spans within
    one tokenization are non-overlapping and ordered.
    """

    mapping: tuple[tuple[int, ...], ...]

    def __getitem__(self, i: int) -> tuple[int, ...]:
        return self.mapping[i]

    def __len__(self) -> int:
        return len(self.mapping)


def normalize_text(text: str) -> str:
    """NFKC-normalize and lowercase; the string all token offsets refer to."""
    return unicodedata.normalize("NFKC", text).lower()


def basic_tokenize(text: str) -> list[TokenSpan]:
    """Split normalized text into maximal runs of alphanumeric characters."""
    norm = normalize_text(text)
    spans: list[TokenSpan] = []
    start: Optional[int] = None
    for i, ch in enumerate(norm):
        if ch.isalnum():
            if start is None:
                start = i
        elif start is not None:
            spans.append(TokenSpan(norm[start:i], start, i))
            start = None
    if start is not None:
        spans.append(TokenSpan(norm[start:], start, len(norm)))
    return spans


def align_tokens(a: Sequence[TokenSpan], b: Sequence[TokenSpan]) -> AlignmentMap:
    """Map each span in `a` to every span in `b` it overlaps.

    Linear two-pointer sweep; both sequences are sorted and non-overlapping,
    so each a-span's matches form a contiguous run in b.
    """
    mapping: list[tuple[int, ...]] = []
    lo = 0
    for span in a:
        while lo < len(b) and b[lo].end <= span.start:
            lo += 1
        j = lo
        matches: list[int] = []
        while j < len(b) and b[j].start < span.end:
            if span.overlaps(b[j]):
                matches.append(j)
            j += 1
        mapping.append(tuple(matches))
    return AlignmentMap(tuple(mapping))


def load_stopwords(path: Optional[Path] = None) -> frozenset[str]:
    """Load the stopword list: bundled resource by default, or a file override.

    Format: UTF-8, one token per line, '#' starts a comment line.
    """
    if path is not None:
        raw = Path(path).read_text(encoding="utf-8")
    else:
        raw = resources.files("crowdmatch.data").joinpath(STOPWORDS_RESOURCE).read_text("utf-8")
    words = set()
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


_BUNDLED_STOPWORDS: Optional[frozenset[str]] = None


def bundled_stopwords() -> frozenset[str]:
    global _BUNDLED_STOPWORDS
    if _BUNDLED_STOPWORDS is None:
        _BUNDLED_STOPWORDS = load_stopwords()
    return _BUNDLED_STOPWORDS


def content_filter(
    tokens: Sequence[TokenSpan], stopwords: Optional[frozenset[str]] = None
) -> list[int]:
    """Indices of tokens that look like content words.

    Keeps a token when it is (a) not stoplisted, (b) at least two characters
    long, and (c) not purely numeric. A deterministic stand-in for a real
    part-of-speech noun selector; may return an empty list.
    """
    stop = bundled_stopwords() if stopwords is None else stopwords
    return [
        i
        for i, tok in enumerate(tokens)
        if tok.text not in stop and len(tok.text) >= 2 and not tok.text.isdigit()
    ]


class TokenFilter(Protocol):
    """Extension point for swapping in a smarter content-word selector.

    Implementations must tokenize the same normalized string produced by
    `normalize_text` so their spans can be aligned with a backend's spans.
    """

    filter_id: str

    def tokenize(self, text: str) -> list[TokenSpan]: ...

    def keep(self, tokens: Sequence[TokenSpan]) -> list[int]: ...


class StopwordTokenFilter:
    """Default filter: basic tokenization plus the stopword/length heuristic."""

    def __init__(self, stopwords: Optional[frozenset[str]] = None, filter_id: str = "stop-v1"):
        self.filter_id = filter_id
        self._stopwords = bundled_stopwords() if stopwords is None else stopwords

    def tokenize(self, text: str) -> list[TokenSpan]:
        return basic_tokenize(text)

    def keep(self, tokens: Sequence[TokenSpan]) -> list[int]:
        return content_filter(tokens, self._stopwords)


class KeepAllTokenFilter:
    """Identity filter: every token is content. Useful for tests and baselines."""

    filter_id = "all"

    def tokenize(self, text: str) -> list[TokenSpan]:
        return basic_tokenize(text)

    def keep(self, tokens: Sequence[TokenSpan]) -> list[int]:
        return list(range(len(tokens)))


def content_tokens(text: str, stopwords: Optional[frozenset[str]] = None) -> list[str]:
    """Content-word token texts with the all-tokens fallback applied.

    The fallback keeps degenerate inputs like "ok" embeddable: when the filter
    rejects everything, every token counts as content.
    """
    tokens = basic_tokenize(text)
    kept = content_filter(tokens, stopwords)
    if not kept:
        return [t.text for t in tokens]
    return [tokens[i].text for i in kept]
