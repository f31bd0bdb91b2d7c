"""64-bit FNV-1a, used for feature hashing, text-change guards and content ids."""

from __future__ import annotations

FNV64_OFFSET_BASIS = 14695981039346656037
FNV64_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


def fnv1a_64(data: bytes) -> int:
    """Hash a byte string with 64-bit FNV-1a."""
    h = FNV64_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & _MASK64
    return h


def text_hash(text: str) -> str:
    """Stable hex digest of a text's UTF-8 bytes; used as a change guard."""
    return f"{fnv1a_64(text.encode('utf-8')):016x}"
