"""Deterministic text embeddings and exact similarity search.

The built-in provider is a signed feature hasher over content tokens. Any
object exposing ``embed(text)``, ``dimension()`` and ``fingerprint`` can be
used in its place.
"""

from __future__ import annotations

import hashlib
import re
from functools import lru_cache
from importlib import resources
from typing import Iterable, Protocol, Sequence

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class EmptyTextError(ValueError):
    """The text produced no tokens."""


class DimensionMismatch(ValueError):
    pass


@lru_cache(maxsize=None)
def load_wordlist(name: str) -> tuple[str, ...]:
    """Read a shipped lexicon, skipping comments and blank lines."""
    text = resources.files("cmamem.data").joinpath(name).read_text(encoding="utf-8")
    return tuple(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    )


@lru_cache(maxsize=None)
def stopwords() -> frozenset[str]:
    return frozenset(load_wordlist("stopwords_v1.txt"))


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric token split."""
    return _TOKEN_RE.findall(text.lower())


def content_tokens(text: str) -> list[str]:
    """Tokens with function words removed; falls back to all tokens when
    nothing else is left (``"the"`` still embeds)."""
    tokens = tokenize(text)
    kept = [t for t in tokens if t not in stopwords()]
    return kept or tokens


class EmbeddingProvider(Protocol):
    fingerprint: str

    def embed(self, text: str) -> np.ndarray: ...

    def dimension(self) -> int: ...


def _token_hash(token: str) -> tuple[int, int]:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=16, person=b"cmamem-fh").digest()
    bucket_key = int.from_bytes(digest[:8], "little")
    sign = 1 if digest[8] & 1 else -1
    return bucket_key, sign


class HashingEmbedder:
    """Signed feature hashing of content tokens, L2-normalised.

    >>> e = HashingEmbedder(dim=64)
    >>> bool(np.array_equal(e.embed("alpha alpha"), e.embed("alpha")))
    True
    """

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.fingerprint = f"hashing-blake2b-v1-d{dim}"
        self._cache: dict[str, tuple[int, int]] = {}

    def dimension(self) -> int:
        return self.dim

    def _feature(self, token: str) -> tuple[int, int]:
        hit = self._cache.get(token)
        if hit is None:
            key, sign = _token_hash(token)
            hit = (key % self.dim, sign)
            self._cache[token] = hit
        return hit

    def embed(self, text: str) -> np.ndarray:
        tokens = content_tokens(text)
        if not tokens:
            raise EmptyTextError(f"no tokens in {text!r}")
        vec = np.zeros(self.dim, dtype=np.float64)
        for tok in tokens:
            bucket, sign = self._feature(tok)
            vec[bucket] += sign
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            # every token cancelled out against a colliding opposite-sign token
            raise EmptyTextError(f"tokens of {text!r} cancel to the zero vector")
        return vec / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit vectors, clipped to [-1, 1]."""
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    return float(min(1.0, max(-1.0, float(np.dot(a, b)))))


def normalize(vec: np.ndarray) -> np.ndarray | None:
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        return None
    return vec / norm


def centroid(vectors: Iterable[np.ndarray]) -> np.ndarray | None:
    vecs = list(vectors)
    if not vecs:
        return None
    return normalize(np.sum(vecs, axis=0))


def top_k(
    query: np.ndarray,
    k: int,
    ids: Sequence[int],
    matrix: np.ndarray,
) -> list[tuple[int, float]]:
    """The ``k`` rows of ``matrix`` most similar to ``query``.

    Descending similarity, ties by ascending id; ``ids[i]`` labels row ``i``.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0 or len(ids) == 0:
        return []
    if matrix.shape[1] != query.shape[0]:
        raise DimensionMismatch(f"{matrix.shape[1]} vs {query.shape[0]}")
    sims = matrix @ query
    order = sorted(range(len(ids)), key=lambda i: (-sims[i], ids[i]))
    return [(ids[i], float(min(1.0, max(-1.0, sims[i])))) for i in order[:k]]
