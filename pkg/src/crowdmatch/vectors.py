"""Embedding vectors and the small amount of vector math everything else uses.

All arithmetic is done in 64-bit floats with a canonical left-to-right
summation order, so identical inputs produce bit-identical results across
runs and platforms. That rules out BLAS-style pairwise reductions; the
corpora handled here are small enough that plain loops are fast anyway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

from .errors import DimensionMismatch, EmptyInput, ZeroVector


@dataclass(frozen=True)
class EmbeddingVector:
    """A fixed-dimension real vector tagged with the provider that produced it."""

    provider_id: str
    dim: int
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise DimensionMismatch(f"dim must be positive, got {self.dim}")
        if len(self.values) != self.dim:
            raise DimensionMismatch(
                f"vector has {len(self.values)} values, declared dim {self.dim}"
            )
        for v in self.values:
            if not math.isfinite(v):
                raise ValueError(f"non-finite component {v!r} in embedding")

    @classmethod
    def of(cls, provider_id: str, values: Iterable[float]) -> "EmbeddingVector":
        vals = tuple(float(v) for v in values)
        return cls(provider_id=provider_id, dim=len(vals), values=vals)


def _check_comparable(a: EmbeddingVector, b: EmbeddingVector) -> None:
    if a.dim != b.dim:
        raise DimensionMismatch(f"dim {a.dim} vs {b.dim}")
    if a.provider_id != b.provider_id:
        raise DimensionMismatch(
            f"vectors from different providers: {a.provider_id!r} vs {b.provider_id!r}"
        )


def dot(a: Sequence[float], b: Sequence[float]) -> float:
    """Left-to-right accumulated dot product (canonical order, float64)."""
    acc = 0.0
    for x, y in zip(a, b):
        acc += x * y
    return acc


def norm(values: Sequence[float]) -> float:
    acc = 0.0
    for x in values:
        acc += x * x
    return math.sqrt(acc)


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine of the angle between two vectors, in [-1, 1].

    Symmetric in its arguments down to the last bit: component products and
    the final norm product commute exactly in IEEE-754. The result is clamped
    to [-1, 1] to absorb float drift on near-parallel vectors.
    """
    _check_comparable(a, b)
    na = norm(a.values)
    nb = norm(b.values)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for an all-zero vector")
    return _clamp_unit(dot(a.values, b.values) / (na * nb))


def l2_normalize(v: EmbeddingVector) -> EmbeddingVector:
    """Scale to unit norm, preserving direction, provider and dim."""
    n = norm(v.values)
    if n == 0.0:
        raise ZeroVector("cannot normalize an all-zero vector")
    return EmbeddingVector(
        provider_id=v.provider_id,
        dim=v.dim,
        values=tuple(x / n for x in v.values),
    )


def mean_pool(vectors: Sequence[EmbeddingVector]) -> EmbeddingVector:
    """Component-wise arithmetic mean of a non-empty list of vectors."""
    if not vectors:
        raise EmptyInput("mean_pool needs at least one vector")
    first = vectors[0]
    for v in vectors[1:]:
        _check_comparable(first, v)
    sums = [0.0] * first.dim
    for v in vectors:
        for i, x in enumerate(v.values):
            sums[i] += x
    n = float(len(vectors))
    return EmbeddingVector(
        provider_id=first.provider_id,
        dim=first.dim,
        values=tuple(s / n for s in sums),
    )


def _clamp_unit(x: float) -> float:
    if x > 1.0:
        return 1.0
    if x < -1.0:
        return -1.0
    return x


def percent(similarity: float) -> float:
    """Display rule for similarities: cosine x 100, rounded half-up to 1 decimal.

    Half-up (not banker's) so 0.565217... renders as 56.5 and 0.05 of a point
    always rounds away from zero, matching how the numbers are reported.
    """
    q = Decimal(repr(similarity * 100.0)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
    return float(q)


def format_percent(similarity: float) -> str:
    """Render the display percentage with exactly one decimal, dot separator."""
    return f"{percent(similarity):.1f}"
