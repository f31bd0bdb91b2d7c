"""Embedding providers: hashing reference, pooled contextual, sentence adapters,
and the provider registry.

Golden values were computed with a straight-line FNV-1a oracle before the
implementation existed and are frozen here.
"""

from __future__ import annotations

import hashlib
import json
from functools import reduce

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowdmatch.errors import (
    DimensionMismatch,
    DuplicateProvider,
    EmptyText,
    UnknownProvider,
)
from crowdmatch.hashing import fnv1a_64
from crowdmatch.providers import (
    HashingEmbeddingProvider,
    HashingTokenBackend,
    PooledContextualProvider,
    ProviderRegistry,
    SentenceEmbeddingProvider,
    default_registry,
    pooled_contextual_embed,
    reference_hash_embed,
    sentence_embed,
)
from crowdmatch.textproc import KeepAllTokenFilter, StopwordTokenFilter, basic_tokenize
from crowdmatch.vectors import EmbeddingVector, cosine_similarity, l2_normalize, mean_pool

# Frozen oracle outputs (64-bit FNV-1a over UTF-8 bytes).
GOLDEN_HASHES = {
    "audio": 17099568057112876377,
    "cuts": 5512810086043540144,
    "payment": 13976534181414136113,
    "receipt": 17938850111118753539,
    "settings": 17176567880082542056,
    "playback": 10628881938191843948,
    "dark": 9611063578541408229,
}
GOLDEN_VECTOR_DIGEST = "0b46e7117ec7823bac5634deb43605da798e7035d6d9ba456282b68e8e67b68f"


def oracle_fnv1a_64(data: bytes) -> int:
    """Independent straight-line restatement used to cross-check goldens."""
    return reduce(
        lambda h, b: ((h ^ b) * 1099511628211) & ((1 << 64) - 1),
        data,
        14695981039346656037,
    )


class TestFnv1a:
    @pytest.mark.parametrize("token,expected", sorted(GOLDEN_HASHES.items()))
    def test_golden_hashes(self, token, expected):
        assert fnv1a_64(token.encode("utf-8")) == expected
        assert oracle_fnv1a_64(token.encode("utf-8")) == expected


class TestReferenceHashEmbed:
    def test_deterministic(self):
        a = reference_hash_embed("the audio keeps cutting off", 384)
        b = reference_hash_embed("the audio keeps cutting off", 384)
        assert a == b
        assert cosine_similarity(a, b) == 1.0

    def test_repeated_token_keeps_direction(self):
        a = reference_hash_embed("audio", 384)
        b = reference_hash_embed("audio audio", 384)
        assert cosine_similarity(a, b) == 1.0

    def test_golden_cosine_disjoint_texts(self):
        # pinned by the oracle: no bucket collision at dim 384
        a = reference_hash_embed("audio cuts", 384)
        b = reference_hash_embed("payment receipt", 384)
        assert cosine_similarity(a, b) == 0.0

    def test_bucket_and_sign_placement(self):
        # "audio": hash 17099568057112876377 -> bucket 345, top bit set -> -1
        v = reference_hash_embed("audio", 384)
        assert v.values[345] == -1.0
        assert sum(1 for x in v.values if x != 0.0) == 1

    def test_order_insensitive(self):
        assert reference_hash_embed("a b", 16) == reference_hash_embed("b a", 16)

    def test_empty_text(self):
        with pytest.raises(EmptyText):
            reference_hash_embed("!!!", 384)

    def test_dim_lower_bound(self):
        with pytest.raises(DimensionMismatch):
            reference_hash_embed("audio", 1)

    def test_golden_full_vector_digest(self):
        v = reference_hash_embed("audio cuts off on android", 384)
        digest = hashlib.sha256(json.dumps(list(v.values)).encode()).hexdigest()
        assert digest == GOLDEN_VECTOR_DIGEST

    @given(st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=8))
    @settings(max_examples=50)
    def test_unit_norm(self, letters):
        text = " ".join(letters)
        v = reference_hash_embed(text, 32)
        renorm = l2_normalize(v)
        for a, b in zip(v.values, renorm.values):
            assert a == pytest.approx(b, abs=1e-9)


class TestHashingProvider:
    def test_provider_id_from_dim(self):
        assert HashingEmbeddingProvider(384).provider_id == "ref-384"
        assert HashingEmbeddingProvider(16).dim == 16

    def test_filters_stopwords_before_hashing(self):
        p = HashingEmbeddingProvider(384)
        bare = p.embed("audio keeps cutting")
        padded = p.embed("the audio keeps cutting off and it is very much so")
        assert bare == padded

    def test_fallback_to_all_tokens(self):
        # every token stoplisted or too short: falls back to the raw tokens
        p = HashingEmbeddingProvider(384)
        assert p.embed("it is") == reference_hash_embed("it is", 384, provider_id="ref-384")

    def test_empty_after_tokenization(self):
        with pytest.raises(EmptyText):
            HashingEmbeddingProvider(384).embed("?!")


class FixedBackend:
    """Backend yielding preset vectors for the basic tokenization of the text."""

    def __init__(self, vectors: list[list[float]], backend_id: str = "fixed", dim: int = None):
        self.backend_id = backend_id
        self.dim = dim if dim is not None else len(vectors[0])
        self._vectors = vectors

    def contextual_token_embeddings(self, text):
        spans = basic_tokenize(text)
        vecs = [
            EmbeddingVector(provider_id=self.backend_id, dim=self.dim, values=tuple(v))
            for v in self._vectors[: len(spans)]
        ]
        return spans, vecs


class PickyFilter:
    """Keeps only tokens whose text is in an allow list."""

    filter_id = "picky"

    def __init__(self, allowed: set[str]):
        self._allowed = allowed

    def tokenize(self, text):
        return basic_tokenize(text)

    def keep(self, tokens):
        return [i for i, t in enumerate(tokens) if t.text in self._allowed]


class TestPooledContextualEmbed:
    def test_mean_of_kept_tokens(self):
        backend = FixedBackend([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
        out = pooled_contextual_embed(backend, PickyFilter({"alpha", "gamma"}), "alpha beta gamma")
        assert out.values == (0.5, 0.0, 0.5)
        assert out.provider_id == "pooled:fixed:picky"

    def test_fallback_means_all_when_filter_keeps_nothing(self):
        backend = FixedBackend([[1, 0], [0, 1]])
        out = pooled_contextual_embed(backend, PickyFilter(set()), "alpha beta")
        assert out.values == (0.5, 0.5)

    def test_single_token_passthrough(self):
        backend = FixedBackend([[0.25, 0.75]])
        out = pooled_contextual_embed(backend, KeepAllTokenFilter(), "alpha")
        assert out.values == (0.25, 0.75)

    def test_identity_filter_equals_mean_pool(self):
        backend = HashingTokenBackend(64)
        text = "audio keeps cutting off tonight"
        spans, vectors = backend.contextual_token_embeddings(text)
        expected = mean_pool(vectors)
        out = pooled_contextual_embed(backend, KeepAllTokenFilter(), text)
        assert out.values == expected.values

    def test_subword_spans_align_to_whole_words(self):
        # backend splits "playback" into two sub-spans; both overlap the
        # filter token "playback", so both vectors are pooled
        class SubwordBackend:
            backend_id = "subword"
            dim = 2

            def contextual_token_embeddings(self, text):
                from crowdmatch.textproc import TokenSpan

                spans = [TokenSpan("play", 0, 4), TokenSpan("back", 4, 8)]
                vecs = [
                    EmbeddingVector(provider_id="subword", dim=2, values=(1.0, 0.0)),
                    EmbeddingVector(provider_id="subword", dim=2, values=(0.0, 1.0)),
                ]
                return spans, vecs

        out = pooled_contextual_embed(SubwordBackend(), StopwordTokenFilter(), "playback")
        assert out.values == (0.5, 0.5)

    def test_empty_text(self):
        with pytest.raises(EmptyText):
            pooled_contextual_embed(HashingTokenBackend(8), KeepAllTokenFilter(), "   ")

    def test_provider_wrapper_byte_stable(self):
        provider = PooledContextualProvider(HashingTokenBackend(96), StopwordTokenFilter())
        first = provider.embed("the battery drains overnight")
        second = provider.embed("the battery drains overnight")
        assert json.dumps(list(first.values)) == json.dumps(list(second.values))
        assert provider.provider_id == "pooled:hashtok-96:stop-v1"


class StubAdapter:
    def __init__(self, values, provider_id="stub", dim=None):
        self.provider_id = provider_id
        self.dim = dim if dim is not None else len(values)
        self._values = values
        self.calls = 0

    def embed_text(self, text):
        self.calls += 1
        return list(self._values)


class TestSentenceEmbed:
    def test_passthrough_contract(self):
        adapter = StubAdapter([0.0] * 7 + [1.0])
        out = sentence_embed(adapter, "anything at all")
        assert out.values == (0.0,) * 7 + (1.0,)
        assert out.provider_id == "stub" and out.dim == 8

    def test_wrong_length_rejected(self):
        adapter = StubAdapter([1.0] * 100, dim=384)
        with pytest.raises(DimensionMismatch):
            sentence_embed(adapter, "text")

    def test_recorded_stub_byte_identical(self):
        adapter = StubAdapter([0.25, -0.5, 0.125])
        a = sentence_embed(adapter, "same text")
        b = sentence_embed(adapter, "same text")
        assert a == b and adapter.calls == 2

    def test_empty_text(self):
        with pytest.raises(EmptyText):
            sentence_embed(StubAdapter([1.0]), " ")

    def test_provider_wrapper(self):
        provider = SentenceEmbeddingProvider(StubAdapter([1.0, 0.0]))
        assert provider.embed("x").values == (1.0, 0.0)


class RecordedSession:
    """requests.Session stand-in replaying recorded /embed exchanges."""

    def __init__(self, exchanges: list[dict]):
        self._exchanges = exchanges

    def post(self, url, json=None, timeout=None):
        assert url.endswith("/embed")
        for exchange in self._exchanges:
            if exchange["request"] == json:
                return _RecordedResponse(exchange["status"], exchange["response"])
        raise AssertionError(f"no recording for request {json!r}")


class _RecordedResponse:
    def __init__(self, status_code, body):
        self.status_code = status_code
        self._body = body
        self.text = json.dumps(body)

    def json(self):
        return self._body


@pytest.fixture(scope="module")
def embed_recordings():
    from helpers import FIXTURES_DIR

    return json.loads((FIXTURES_DIR / "embed_endpoint.json").read_text("utf-8"))["exchanges"]


class TestRemoteEmbeddingAdapter:
    def make_adapter(self, embed_recordings, dim=8):
        from crowdmatch.providers import RemoteEmbeddingAdapter

        return RemoteEmbeddingAdapter(
            "http://embed.example", "mini-test", dim=dim,
            session=RecordedSession(embed_recordings),
        )

    def test_recorded_roundtrip(self, embed_recordings):
        adapter = self.make_adapter(embed_recordings)
        provider = SentenceEmbeddingProvider(adapter)
        out = provider.embed("The audio keeps cutting off")
        assert out.values == (0.25, -0.125, 0.5, 0.0, 0.0, 0.75, -0.25, 0.125)
        assert out.provider_id == "remote:mini-test"

    def test_recorded_replay_is_deterministic(self, embed_recordings):
        adapter = self.make_adapter(embed_recordings)
        a = sentence_embed(adapter, "please add dark mode")
        b = sentence_embed(adapter, "please add dark mode")
        assert a == b

    def test_wrong_dim_from_endpoint(self, embed_recordings):
        adapter = self.make_adapter(embed_recordings)
        with pytest.raises(DimensionMismatch):
            adapter.embed_text("wrong sized answer")

    def test_http_error_is_backend_unavailable(self, embed_recordings):
        from crowdmatch.errors import BackendUnavailable

        adapter = self.make_adapter(embed_recordings)
        with pytest.raises(BackendUnavailable) as err:
            adapter.embed_text("overloaded")
        assert "model worker unavailable" in str(err.value)

    def test_unreachable_endpoint(self):
        from crowdmatch.errors import BackendUnavailable
        from crowdmatch.providers import RemoteEmbeddingAdapter

        adapter = RemoteEmbeddingAdapter("http://127.0.0.1:9", "m", dim=4, timeout=0.2)
        with pytest.raises(BackendUnavailable):
            adapter.embed_text("anything")

    def test_live_endpoint_roundtrip(self):
        from helpers import LocalJsonServer
        from crowdmatch.providers import RemoteEmbeddingAdapter

        def handle(body):
            assert body["model"] == "live-test"
            return 200, {"dim": 4, "vectors": [[0.5, 0.5, 0.5, 0.5]]}

        with LocalJsonServer({"POST /embed": handle}) as server:
            adapter = RemoteEmbeddingAdapter(server.base_url, "live-test", dim=4)
            assert list(adapter.embed_text("hello")) == [0.5, 0.5, 0.5, 0.5]


class TestRegistry:
    def test_register_get(self):
        reg = ProviderRegistry()
        p = HashingEmbeddingProvider(384)
        reg.register(p)
        assert reg.get("ref-384") is p

    def test_unknown(self):
        with pytest.raises(UnknownProvider):
            ProviderRegistry().get("nope")

    def test_duplicate(self):
        reg = ProviderRegistry()
        reg.register(HashingEmbeddingProvider(384))
        with pytest.raises(DuplicateProvider):
            reg.register(HashingEmbeddingProvider(384))

    def test_listing_sorted(self):
        reg = ProviderRegistry()
        reg.register(HashingEmbeddingProvider(16))  # ref-16
        reg.register(HashingEmbeddingProvider(8))  # ref-8
        assert reg.list_providers() == ["ref-16", "ref-8"]

    def test_default_registry_contents(self):
        reg = default_registry()
        assert "ref-384" in reg.list_providers()
        assert "pooled:hashtok-384:stop-v1" in reg.list_providers()
