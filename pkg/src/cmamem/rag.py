"""Flat vector-store baseline with recency-weighted, read-only retrieval."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedding import EmbeddingProvider, HashingEmbedder
from .params import DEFAULT_DECAY_RATE
from .store import SCHEMA_VERSION, StoreCorruption, _decode_vec, _encode_vec, canonical_json


@dataclass(frozen=True)
class RagDocument:
    id: int
    text: str
    embedding: np.ndarray
    created_at: float


@dataclass(frozen=True)
class RagHit:
    doc_id: int
    score: float
    sim: float
    decay: float
    text: str
    rank: int


class RagBaseline:
    """Exact cosine search with a temporal decay adjustment.

    ``combine="multiplicative"`` scores ``max(0, cos) * exp(-decay_rate * age)``;
    ``"additive"`` scores ``(1 - recency_weight) * max(0, cos) + recency_weight * exp(...)``.
    Documents with zero similarity are never returned.
    """

    def __init__(self, embedder: EmbeddingProvider | None = None,
                 decay_rate: float = DEFAULT_DECAY_RATE,
                 combine: str = "multiplicative", recency_weight: float = 0.2):
        if combine not in ("multiplicative", "additive"):
            raise ValueError(f"unknown combine rule {combine!r}")
        if decay_rate < 0:
            raise ValueError("decay_rate must be >= 0")
        self.embedder = embedder or HashingEmbedder()
        self.decay_rate = decay_rate
        self.combine = combine
        self.recency_weight = recency_weight
        self.docs: list[RagDocument] = []
        self._matrix = np.zeros((0, self.embedder.dimension()))

    @property
    def fingerprint(self) -> str:
        return self.embedder.fingerprint

    def __len__(self) -> int:
        return len(self.docs)

    def ingest(self, text: str, ts: float) -> int:
        if not isinstance(text, str) or not text.strip():
            raise ValueError("empty text")
        vec = self.embedder.embed(text)
        doc = RagDocument(len(self.docs) + 1, text, vec, float(ts))
        self.docs.append(doc)
        self._matrix = np.vstack([self._matrix, vec[None, :]])
        return doc.id

    def retrieve(self, query: str, k: int = 5, now: float | None = None) -> list[RagHit]:
        if not query or not query.strip():
            raise ValueError("empty query")
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self.docs:
            return []
        if now is None:
            now = max(d.created_at for d in self.docs)
        qvec = self.embedder.embed(query)
        sims = np.clip(self._matrix @ qvec, 0.0, 1.0)
        scored = []
        for doc, sim in zip(self.docs, sims):
            if sim <= 0.0:
                continue
            decay = math.exp(-self.decay_rate * max(0.0, now - doc.created_at))
            if self.combine == "multiplicative":
                s = float(sim) * decay
            else:
                s = (1.0 - self.recency_weight) * float(sim) + self.recency_weight * decay
            scored.append((s, doc.id, float(sim), decay, doc.text))
        scored.sort(key=lambda row: (-row[0], row[1]))
        return [RagHit(i, s, sim, d, t, rank) for rank, (s, i, sim, d, t) in enumerate(scored[:k], 1)]

    # -- persistence -----------------------------------------------------

    def dumps(self) -> bytes:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "embedder": self.fingerprint,
            "decay_rate": self.decay_rate,
            "combine": self.combine,
            "recency_weight": self.recency_weight,
            "documents": [
                {"id": d.id, "text": d.text, "embedding": _encode_vec(d.embedding), "created_at": d.created_at}
                for d in self.docs
            ],
        }
        return (canonical_json(doc) + "\n").encode("utf-8")

    def save(self, path: str | os.PathLike) -> int:
        data = self.dumps()
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
        return len(data)

    @classmethod
    def load(cls, path: str | os.PathLike, embedder: EmbeddingProvider | None = None) -> "RagBaseline":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
            if doc.get("schema_version") != SCHEMA_VERSION:
                raise StoreCorruption("unsupported RAG schema_version")
            rag = cls(embedder, doc["decay_rate"], doc["combine"], doc["recency_weight"])
            if rag.fingerprint != doc["embedder"]:
                raise StoreCorruption(f"store was built with {doc['embedder']}, not {rag.fingerprint}")
            for d in doc["documents"]:
                rag.docs.append(RagDocument(d["id"], d["text"], _decode_vec(d["embedding"]), d["created_at"]))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            if isinstance(exc, StoreCorruption):
                raise
            raise StoreCorruption(f"cannot load RAG store: {exc}") from None
        if rag.docs:
            rag._matrix = np.vstack([d.embedding for d in rag.docs])
        return rag
