"""Embedding providers.

Three families ship out of the box:

* a deterministic signed feature-hashing embedder (the reference provider,
  usable everywhere without model weights),
* pooled contextual-token embedding: a token-embedding backend plus a content
  filter, averaged into one vector,
* sentence-level embedding through an adapter (a local inference runtime or a
  remote HTTP endpoint).

Every provider must be deterministic: the same provider_id and input text
always yield the identical vector, regardless of call interleaving.
"""

from __future__ import annotations

import threading
from typing import Optional, Protocol, Sequence

from .errors import (
    BackendUnavailable,
    DimensionMismatch,
    DuplicateProvider,
    EmptyText,
    UnknownProvider,
)
from .hashing import fnv1a_64
from .textproc import TokenFilter, TokenSpan, align_tokens, basic_tokenize, content_tokens
from .vectors import EmbeddingVector, l2_normalize, mean_pool


class EmbeddingProvider(Protocol):
    """Anything that can turn a text into one fixed-dimension vector."""

    provider_id: str
    dim: int

    def embed(self, text: str) -> EmbeddingVector: ...


class TokenEmbeddingBackend(Protocol):
    """A backend producing one contextual vector per token.

    Returned spans must refer to the normalized form of the input text (see
    `textproc.normalize_text`) so they can be aligned with a TokenFilter's
    tokenization of the same string.
    """

    backend_id: str
    dim: int

    def contextual_token_embeddings(
        self, text: str
    ) -> tuple[list[TokenSpan], list[EmbeddingVector]]: ...


def _hash_bucket_accumulate(tokens: Sequence[str], dim: int) -> list[int]:
    # Integer accumulation keeps this exactly order-insensitive.
    buckets = [0] * dim
    for tok in tokens:
        h = fnv1a_64(tok.encode("utf-8"))
        bucket = h % dim
        sign = 1 if (h >> 63) == 0 else -1
        buckets[bucket] += sign
    return buckets


def _buckets_to_vector(buckets: Sequence[int], provider_id: str, dim: int) -> EmbeddingVector:
    raw = EmbeddingVector(provider_id=provider_id, dim=dim, values=tuple(float(b) for b in buckets))
    return l2_normalize(raw)


def reference_hash_embed(text: str, dim: int, provider_id: Optional[str] = None) -> EmbeddingVector:
    """Signed feature hashing over basic tokens.

    Per token: 64-bit FNV-1a over the UTF-8 bytes picks a bucket (h mod dim)
    and a sign (+1 when the top hash bit is clear), the signs accumulate, and
    the bucket vector is L2-normalized. Deterministic by construction and
    insensitive to token order.
    """
    if dim < 2:
        raise DimensionMismatch(f"hash embedding needs dim >= 2, got {dim}")
    tokens = [t.text for t in basic_tokenize(text)]
    if not tokens:
        raise EmptyText("no tokens survive tokenization")
    pid = provider_id if provider_id is not None else f"ref-{dim}"
    return _buckets_to_vector(_hash_bucket_accumulate(tokens, dim), pid, dim)


class HashingEmbeddingProvider:
    """The reference provider: content-filtered signed feature hashing.

    Stopwords and other non-content tokens are dropped before hashing, so
    padding a text with filler does not move its vector. When the filter
    rejects every token the full token list is hashed instead.
    """

    def __init__(self, dim: int = 384, stopwords: Optional[frozenset[str]] = None):
        if dim < 2:
            raise DimensionMismatch(f"hash embedding needs dim >= 2, got {dim}")
        self.dim = dim
        self.provider_id = f"ref-{dim}"
        self._stopwords = stopwords

    def embed(self, text: str) -> EmbeddingVector:
        tokens = content_tokens(text, self._stopwords)
        if not tokens:
            raise EmptyText("no tokens survive tokenization")
        return _buckets_to_vector(
            _hash_bucket_accumulate(tokens, self.dim), self.provider_id, self.dim
        )


class HashingTokenBackend:
    """Deterministic token-embedding backend: one signed one-hot vector per token.

    Stands in for a contextual model in tests and offline runs; spans come
    from `basic_tokenize`, so they align with the default filter exactly.
    """

    def __init__(self, dim: int = 384):
        if dim < 2:
            raise DimensionMismatch(f"hash backend needs dim >= 2, got {dim}")
        self.dim = dim
        self.backend_id = f"hashtok-{dim}"

    def contextual_token_embeddings(
        self, text: str
    ) -> tuple[list[TokenSpan], list[EmbeddingVector]]:
        spans = basic_tokenize(text)
        vectors = []
        for span in spans:
            values = [0.0] * self.dim
            h = fnv1a_64(span.text.encode("utf-8"))
            values[h % self.dim] = 1.0 if (h >> 63) == 0 else -1.0
            vectors.append(
                EmbeddingVector(provider_id=self.backend_id, dim=self.dim, values=tuple(values))
            )
        return spans, vectors


def pooled_provider_id(backend_id: str, filter_id: str) -> str:
    return f"pooled:{backend_id}:{filter_id}"


def pooled_contextual_embed(
    backend: TokenEmbeddingBackend, token_filter: TokenFilter, text: str
) -> EmbeddingVector:
    """Average the backend's token vectors for tokens the filter keeps.

    Backend tokens are matched to filter tokens by character-span overlap.
    If no backend token overlaps a kept filter token, all backend vectors are
    pooled instead, so short or all-stopword texts still embed.
    """
    if not text.strip():
        raise EmptyText("cannot embed empty text")
    backend_spans, backend_vectors = backend.contextual_token_embeddings(text)
    if not backend_vectors:
        raise EmptyText("backend produced no tokens")

    filter_spans = token_filter.tokenize(text)
    kept_filter = set(token_filter.keep(filter_spans))
    alignment = align_tokens(backend_spans, filter_spans)
    kept_vectors = [
        vec
        for i, vec in enumerate(backend_vectors)
        if any(j in kept_filter for j in alignment[i])
    ]
    if not kept_vectors:
        kept_vectors = list(backend_vectors)

    pooled = mean_pool(kept_vectors)
    pid = pooled_provider_id(backend.backend_id, token_filter.filter_id)
    return EmbeddingVector(provider_id=pid, dim=pooled.dim, values=pooled.values)


class PooledContextualProvider:
    """Filtered contextual-token pooling behind the provider interface."""

    def __init__(self, backend: TokenEmbeddingBackend, token_filter: TokenFilter):
        self._backend = backend
        self._filter = token_filter
        self.dim = backend.dim
        self.provider_id = pooled_provider_id(backend.backend_id, token_filter.filter_id)

    def embed(self, text: str) -> EmbeddingVector:
        return pooled_contextual_embed(self._backend, self._filter, text)


class SentenceModelAdapter(Protocol):
    """A model or endpoint computing one vector per input text."""

    provider_id: str
    dim: int

    def embed_text(self, text: str) -> Sequence[float]: ...


def sentence_embed(adapter: SentenceModelAdapter, text: str) -> EmbeddingVector:
    """Pass-through to a sentence-level adapter, validating the declared dim."""
    if not text.strip():
        raise EmptyText("cannot embed empty text")
    values = tuple(float(v) for v in adapter.embed_text(text))
    if len(values) != adapter.dim:
        raise DimensionMismatch(
            f"adapter {adapter.provider_id!r} returned {len(values)} values, declared {adapter.dim}"
        )
    return EmbeddingVector(provider_id=adapter.provider_id, dim=adapter.dim, values=values)


class SentenceEmbeddingProvider:
    """Sentence-level embedding behind the provider interface."""

    def __init__(self, adapter: SentenceModelAdapter):
        self._adapter = adapter
        self.provider_id = adapter.provider_id
        self.dim = adapter.dim

    def embed(self, text: str) -> EmbeddingVector:
        return sentence_embed(self._adapter, text)


class RemoteEmbeddingAdapter:
    """Sentence adapter backed by a remote HTTP embedding endpoint.

    Wire contract: POST {base_url}/embed with {"texts": [text], "model": m};
    the endpoint answers {"dim": int, "vectors": [[float, ...]]} or an HTTP
    error with {"error": str}. Calls are serialized on one session.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        dim: int = 384,
        provider_id: Optional[str] = None,
        session=None,
        timeout: float = 30.0,
    ):
        import requests

        self._base_url = base_url.rstrip("/")
        self._model = model
        self.dim = dim
        self.provider_id = provider_id if provider_id is not None else f"remote:{model}"
        self._session = session if session is not None else requests.Session()
        self._timeout = timeout
        self._lock = threading.Lock()

    def embed_text(self, text: str) -> Sequence[float]:
        import requests

        payload = {"texts": [text], "model": self._model}
        try:
            with self._lock:
                resp = self._session.post(
                    f"{self._base_url}/embed", json=payload, timeout=self._timeout
                )
        except requests.RequestException as exc:
            raise BackendUnavailable(f"embedding endpoint unreachable: {exc}") from exc
        if resp.status_code >= 400:
            detail = ""
            try:
                detail = resp.json().get("error", "")
            except ValueError:
                pass
            raise BackendUnavailable(
                f"embedding endpoint returned {resp.status_code}: {detail or resp.text[:200]}"
            )
        body = resp.json()
        vectors = body.get("vectors") or []
        if len(vectors) != 1:
            raise BackendUnavailable(f"expected 1 vector, endpoint sent {len(vectors)}")
        if body.get("dim") != self.dim or len(vectors[0]) != self.dim:
            raise DimensionMismatch(
                f"endpoint dim {body.get('dim')}/{len(vectors[0])} != declared {self.dim}"
            )
        return vectors[0]


class SentenceTransformersAdapter:
    """Local sentence-transformers runtime (optional; needs model weights).

    Imported lazily so the core package never depends on model code.
    """

    def __init__(self, model_name: str = "all-MiniLM-L6-v2", dim: int = 384):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise BackendUnavailable("sentence-transformers is not installed") from exc
        try:
            self._model = SentenceTransformer(model_name)
        except Exception as exc:
            raise BackendUnavailable(f"could not load model {model_name!r}: {exc}") from exc
        self.provider_id = f"st:{model_name}"
        self.dim = dim
        self._lock = threading.Lock()

    def embed_text(self, text: str) -> Sequence[float]:
        with self._lock:
            return [float(v) for v in self._model.encode(text)]


class ProviderRegistry:
    """Directory of embedding providers, keyed by provider_id."""

    def __init__(self) -> None:
        self._providers: dict[str, EmbeddingProvider] = {}
        self._lock = threading.Lock()

    def register(self, provider: EmbeddingProvider) -> None:
        with self._lock:
            if provider.provider_id in self._providers:
                raise DuplicateProvider(f"provider {provider.provider_id!r} already registered")
            self._providers[provider.provider_id] = provider

    def get(self, provider_id: str) -> EmbeddingProvider:
        with self._lock:
            try:
                return self._providers[provider_id]
            except KeyError:
                raise UnknownProvider(f"no provider registered as {provider_id!r}") from None

    def list_providers(self) -> list[str]:
        with self._lock:
            return sorted(self._providers)


def default_registry(dim: int = 384) -> ProviderRegistry:
    """Registry with the two model-free providers everyone gets for free."""
    registry = ProviderRegistry()
    registry.register(HashingEmbeddingProvider(dim))
    from .textproc import StopwordTokenFilter

    registry.register(PooledContextualProvider(HashingTokenBackend(dim), StopwordTokenFilter()))
    return registry
