"""Exact top-k cosine retrieval of issues for a query text.

The index packs all issue vectors for one provider, unit-normalized, sorted
by iid. Queries are one normalized dot product per entry followed by a full
deterministic sort: similarity descending, ties broken by ascending iid.
Corpora are small enough that the exact scan beats any approximate structure
on both simplicity and reproducibility.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from datetime import datetime
from typing import Optional

from .enrich import Enricher, EnrichOptions
from .errors import DimensionMismatch, EmptyText, NoEmbeddings
from .model import Issue, MatchCandidate, Review, ReviewClass, utc_now
from .providers import ProviderRegistry
from .vectors import EmbeddingVector, dot, l2_normalize
from .workspace import Workspace, review_id_for_text


@dataclass(frozen=True)
class MatchIndex:
    provider_id: str
    dim: int
    entries: tuple[tuple[int, tuple[float, ...]], ...]  # (iid, unit vector), iid ascending
    built_at: datetime
    source_digest: str

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class MatchResult:
    """Ranked candidates for one query, plus what enrichment found out."""

    provider_id: str
    candidates: tuple[MatchCandidate, ...]
    k_requested: int
    threshold_applied: Optional[float] = None
    review_id: Optional[str] = None
    query_text: Optional[str] = None
    filtered_out: bool = False
    translated_text: Optional[str] = None
    label: Optional[ReviewClass] = None


def _records_digest(pairs: list[tuple[str, str]]) -> str:
    from .hashing import fnv1a_64

    joined = "\n".join(f"{key}\t{digest}" for key, digest in sorted(pairs))
    return f"{fnv1a_64(joined.encode('utf-8')):016x}"


def build_index(workspace: Workspace, provider_id: str) -> MatchIndex:
    """Load, normalize and pack all issue vectors stored for a provider."""
    records = [
        rec for rec in workspace.load_embeddings(provider_id).values() if rec.kind == "issue"
    ]
    if not records:
        raise NoEmbeddings(f"no issue embeddings stored for provider {provider_id!r}")
    dims = {rec.dim for rec in records}
    if len(dims) != 1:
        raise DimensionMismatch(f"mixed dims in stored embeddings: {sorted(dims)}")
    dim = dims.pop()

    entries = []
    for rec in sorted(records, key=lambda r: int(r.key)):
        unit = l2_normalize(EmbeddingVector(provider_id=provider_id, dim=dim, values=rec.values))
        entries.append((int(rec.key), unit.values))
    return MatchIndex(
        provider_id=provider_id,
        dim=dim,
        entries=tuple(entries),
        built_at=utc_now(),
        source_digest=_records_digest([(r.key, r.text_hash) for r in records]),
    )


def _clamp_unit(x: float) -> float:
    if x > 1.0:
        return 1.0
    if x < -1.0:
        return -1.0
    return x


def query_top_k(
    index: MatchIndex,
    query: EmbeddingVector,
    k: int,
    threshold: Optional[float] = None,
) -> MatchResult:
    """Exact scan for the k most cosine-similar issues.

    A threshold of None admits everything (same as -1). Ties are broken by
    ascending iid, so results are fully deterministic.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if threshold is not None and not -1.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [-1, 1], got {threshold}")
    if query.dim != index.dim:
        raise DimensionMismatch(f"query dim {query.dim} != index dim {index.dim}")
    if query.provider_id != index.provider_id:
        raise DimensionMismatch(
            f"query from provider {query.provider_id!r}, index is {index.provider_id!r}"
        )

    unit_query = l2_normalize(query).values
    scored: list[tuple[float, int]] = []
    for iid, values in index.entries:
        sim = _clamp_unit(dot(unit_query, values))
        if threshold is not None and sim < threshold:
            continue
        scored.append((sim, iid))
    scored.sort(key=lambda pair: (-pair[0], pair[1]))

    candidates = tuple(
        MatchCandidate(issue_iid=iid, similarity=sim, rank=position)
        for position, (sim, iid) in enumerate(scored[:k], start=1)
    )
    return MatchResult(
        provider_id=index.provider_id,
        candidates=candidates,
        k_requested=k,
        threshold_applied=threshold,
    )


def match_payload(result: MatchResult, issues: dict[int, Issue]) -> dict:
    """The one JSON shape for a match result, shared by the CLI and the API.

    Candidates carry the raw cosine plus the display percent; issue title and
    url are joined in from the corpus when available.
    """
    from .vectors import percent

    candidates = []
    for cand in result.candidates:
        issue = issues.get(cand.issue_iid)
        candidates.append(
            {
                "issue_iid": cand.issue_iid,
                "rank": cand.rank,
                "similarity": cand.similarity,
                "percent": percent(cand.similarity),
                "title": getattr(issue, "title", None),
                "title_translated": getattr(issue, "title_translated", None),
                "url": getattr(issue, "url", None),
            }
        )
    return {
        "review_id": result.review_id,
        "query_text": result.query_text,
        "provider_id": result.provider_id,
        "k_requested": result.k_requested,
        "threshold_applied": result.threshold_applied,
        "filtered_out": result.filtered_out,
        "translated_text": result.translated_text,
        "label": result.label.value if result.label is not None else None,
        "candidates": candidates,
    }


@dataclass(frozen=True)
class MatchOptions:
    """Knobs for one match run; defaults mirror the evaluation protocol
    (five candidates, threshold disabled)."""

    provider_id: str = "ref-384"
    k: int = 5
    threshold: Optional[float] = None
    translate_to: Optional[str] = None
    classify: bool = False
    classify_filter: Optional[frozenset[ReviewClass]] = None

    @property
    def wants_classification(self) -> bool:
        return self.classify or self.classify_filter is not None


class MatchPipeline:
    """End-to-end matching over one workspace: enrich, embed, retrieve.

    Indices are built lazily, once per provider, guarded so concurrent first
    queries trigger exactly one build; a changed embeddings file invalidates
    the cached index atomically.
    """

    def __init__(
        self,
        workspace: Workspace,
        registry: ProviderRegistry,
        enricher: Optional[Enricher] = None,
    ):
        self.workspace = workspace
        self.registry = registry
        self.enricher = enricher if enricher is not None else Enricher()
        self._indices: dict[str, tuple[MatchIndex, tuple]] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock_for(self, provider_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(provider_id, threading.Lock())

    def _file_fingerprint(self, provider_id: str) -> tuple:
        path = self.workspace.embeddings_path(provider_id)
        try:
            st = path.stat()
        except FileNotFoundError:
            return ("missing",)
        return (st.st_mtime_ns, st.st_size)

    def index_for(self, provider_id: str) -> MatchIndex:
        fingerprint = self._file_fingerprint(provider_id)
        cached = self._indices.get(provider_id)
        if cached is not None and cached[1] == fingerprint:
            return cached[0]
        with self._lock_for(provider_id):
            cached = self._indices.get(provider_id)
            if cached is not None and cached[1] == fingerprint:
                return cached[0]
            index = build_index(self.workspace, provider_id)
            self._indices[provider_id] = (index, fingerprint)
            return index

    def match_text(
        self,
        text: str,
        opts: MatchOptions,
        lang: str = "en",
        review_id: Optional[str] = None,
    ) -> MatchResult:
        if not text.strip():
            raise EmptyText("cannot match empty text")
        review = Review(
            id=review_id if review_id is not None else review_id_for_text(text),
            original_text=text,
            original_lang=lang,
            source="adhoc",
        )
        return self.match_stored(review, opts)

    def match_stored(self, review: Review, opts: MatchOptions) -> MatchResult:
        """Match one review, enriching it first when the options ask for it."""
        enriched = review
        needs_translation = (
            opts.translate_to is not None
            and review.translated_text is None
            and review.original_lang != opts.translate_to
        )
        enrich_opts = EnrichOptions(
            translate_to=opts.translate_to if needs_translation else None,
            classify=opts.wants_classification and review.label is None,
        )
        if enrich_opts.translate_to is not None or enrich_opts.classify:
            enriched = self.enricher.enrich_review(review, enrich_opts)

        if opts.classify_filter is not None and enriched.label not in opts.classify_filter:
            return MatchResult(
                provider_id=opts.provider_id,
                candidates=(),
                k_requested=opts.k,
                threshold_applied=opts.threshold,
                review_id=enriched.id,
                query_text=enriched.original_text,
                filtered_out=True,
                translated_text=enriched.translated_text,
                label=enriched.label,
            )

        provider = self.registry.get(opts.provider_id)
        vector = provider.embed(enriched.embed_text)
        index = self.index_for(opts.provider_id)
        result = query_top_k(index, vector, opts.k, opts.threshold)
        return replace(
            result,
            review_id=enriched.id,
            query_text=enriched.original_text,
            translated_text=enriched.translated_text,
            label=enriched.label,
        )
