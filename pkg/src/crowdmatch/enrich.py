"""Review enrichment: classification and translation.

Both capabilities sit behind adapter seams. The built-in classifier is a
deterministic keyword baseline; translation always goes through an adapter,
with a persistent on-disk cache in front so reruns are cheap and reproducible
even when the adapter is offline.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Protocol

from .errors import EmptyText, ProviderUnavailable, UnsupportedLanguage
from .hashing import text_hash
from .model import Review, ReviewClass


@dataclass(frozen=True)
class ClassifierRule:
    review_class: ReviewClass
    keywords: tuple[str, ...]


# Single-word keywords match any token by prefix ("crash" fires on "crashes");
# multi-word phrases match as substrings of the normalized text. Bug keywords
# are checked first: when both families fire, BugReport wins.
BUG_KEYWORDS = (
    "crash",
    "error",
    "bug",
    "freeze",
    "frozen",
    "broken",
    "fails",
    "fail",
    "stuck",
    "doesn't work",
    "not working",
    "won't open",
)
FEATURE_KEYWORDS = (
    "add",
    "wish",
    "please",
    "feature",
    "would be",
    "could you",
    "suggest",
    "missing",
    "option",
)

RULE_TABLE = (
    ClassifierRule(ReviewClass.BUG_REPORT, BUG_KEYWORDS),
    ClassifierRule(ReviewClass.FEATURE_REQUEST, FEATURE_KEYWORDS),
)

_WORD_RE = re.compile(r"[a-z0-9']+")


def _normalize_for_rules(text: str) -> str:
    # Curly apostrophes fold to ASCII so ("won't open") matches typed text.
    folded = text.lower().replace("’", "'")
    return " ".join(folded.split())


def classify_review(text: str) -> ReviewClass:
    """Rule-baseline classification into bug report / feature request / irrelevant."""
    normalized = _normalize_for_rules(text)
    if not normalized:
        raise EmptyText("cannot classify empty text")
    words = _WORD_RE.findall(normalized)
    for rule in RULE_TABLE:
        for keyword in rule.keywords:
            if " " in keyword:
                if keyword in normalized:
                    return rule.review_class
            elif any(w.startswith(keyword) for w in words):
                return rule.review_class
    return ReviewClass.IRRELEVANT


class ClassifierAdapter(Protocol):
    """Seam for replacing the baseline with an external model endpoint."""

    def classify(self, text: str) -> ReviewClass: ...


class RemoteClassifierAdapter:
    """Classifier endpoint: POST {base}/classify {"text": t} -> {"label": ...}."""

    _LABELS = {
        "bug": ReviewClass.BUG_REPORT,
        "feature": ReviewClass.FEATURE_REQUEST,
        "irrelevant": ReviewClass.IRRELEVANT,
    }

    def __init__(self, base_url: str, session=None, timeout: float = 30.0):
        import requests

        self._base_url = base_url.rstrip("/")
        self._session = session if session is not None else requests.Session()
        self._timeout = timeout

    def classify(self, text: str) -> ReviewClass:
        import requests

        try:
            resp = self._session.post(
                f"{self._base_url}/classify", json={"text": text}, timeout=self._timeout
            )
        except requests.RequestException as exc:
            raise ProviderUnavailable(f"classifier endpoint unreachable: {exc}") from exc
        if resp.status_code >= 400:
            raise ProviderUnavailable(f"classifier endpoint returned {resp.status_code}")
        label = resp.json().get("label", "")
        try:
            return self._LABELS[label]
        except KeyError:
            raise ProviderUnavailable(f"classifier sent unknown label {label!r}") from None


@dataclass(frozen=True)
class TranslationRecord:
    """One cached translation; the cache key is everything but the output."""

    source_lang: str
    target_lang: str
    input_hash: str
    output_text: str
    provider: str

    def key(self) -> tuple[str, str, str, str]:
        return (self.provider, self.source_lang, self.target_lang, self.input_hash)


class TranslationAdapter(Protocol):
    """Seam for any service that can translate between two language tags."""

    provider_name: str

    def translate(self, text: str, source: str, target: str) -> str: ...


class RemoteTranslationAdapter:
    """Translation endpoint: POST {base}/translate {"q","source","target"}."""

    def __init__(self, base_url: str, provider_name: str = "remote", session=None,
                 timeout: float = 30.0):
        import requests

        self._base_url = base_url.rstrip("/")
        self.provider_name = provider_name
        self._session = session if session is not None else requests.Session()
        self._timeout = timeout

    def translate(self, text: str, source: str, target: str) -> str:
        import requests

        payload = {"q": text, "source": source, "target": target}
        try:
            resp = self._session.post(
                f"{self._base_url}/translate", json=payload, timeout=self._timeout
            )
        except requests.RequestException as exc:
            raise ProviderUnavailable(f"translation endpoint unreachable: {exc}") from exc
        if resp.status_code == 400:
            # The endpoint uses 400 for language pairs it cannot handle.
            try:
                message = resp.json().get("error", "unsupported language pair")
            except ValueError:
                message = "unsupported language pair"
            raise UnsupportedLanguage(message)
        if resp.status_code >= 400:
            raise ProviderUnavailable(f"translation endpoint returned {resp.status_code}")
        return resp.json()["translatedText"]


class TranslationCache:
    """Persistent translation cache: JSONL on disk, dict in memory.

    Reads are lock-free against the in-memory map; writes are serialized and
    appended through one lock.
    """

    def __init__(self, path: Path):
        self._path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[tuple[str, str, str, str], str] = {}
        if self._path.exists():
            with self._path.open(encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    record = TranslationRecord(**rec)
                    self._entries[record.key()] = record.output_text

    def get(self, provider: str, source: str, target: str, input_hash: str) -> Optional[str]:
        return self._entries.get((provider, source, target, input_hash))

    def put(self, record: TranslationRecord) -> None:
        with self._lock:
            if record.key() in self._entries:
                return
            self._entries[record.key()] = record.output_text
            self._path.parent.mkdir(parents=True, exist_ok=True)
            with self._path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.__dict__, ensure_ascii=False, sort_keys=True) + "\n")

    def __len__(self) -> int:
        return len(self._entries)


@dataclass(frozen=True)
class EnrichOptions:
    translate_to: Optional[str] = None
    classify: bool = False


class Enricher:
    """Translate-then-classify pipeline over a review.

    Translation runs first because the classifier (baseline or adapter) is
    keyed to English. With a warm cache the whole pipeline is a pure function
    of its inputs; applying it twice changes nothing.
    """

    def __init__(
        self,
        translator: Optional[TranslationAdapter] = None,
        classifier: Optional[ClassifierAdapter] = None,
        cache: Optional[TranslationCache] = None,
        max_inflight: int = 4,
    ):
        self._translator = translator
        self._classifier = classifier
        self._cache = cache
        self._inflight = threading.Semaphore(max_inflight)

    def translate(self, text: str, source: str, target: str) -> str:
        if not text.strip():
            raise EmptyText("cannot translate empty text")
        if not target:
            raise ValueError("target language tag must be non-empty")
        if source == target:
            return text

        provider = self._translator.provider_name if self._translator else "none"
        digest = text_hash(text)
        if self._cache is not None:
            hit = self._cache.get(provider, source, target, digest)
            if hit is not None:
                return hit
        if self._translator is None:
            raise ProviderUnavailable("no translation adapter configured and no cache hit")
        with self._inflight:
            translated = self._translator.translate(text, source, target)
        if self._cache is not None:
            self._cache.put(
                TranslationRecord(
                    source_lang=source,
                    target_lang=target,
                    input_hash=digest,
                    output_text=translated,
                    provider=provider,
                )
            )
        return translated

    def classify(self, text: str) -> ReviewClass:
        if self._classifier is not None:
            with self._inflight:
                return self._classifier.classify(text)
        return classify_review(text)

    def enrich_review(self, review: Review, opts: EnrichOptions) -> Review:
        enriched = review
        if opts.translate_to is not None:
            translated = self.translate(review.original_text, review.original_lang,
                                        opts.translate_to)
            enriched = replace(enriched, translated_text=translated)
        if opts.classify:
            label = self.classify(enriched.embed_text)
            enriched = replace(enriched, label=label)
        return enriched
