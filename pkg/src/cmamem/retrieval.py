"""Multi-factor ranking over the activation field, and the mutation that a
consumed retrieval applies back to the store."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .activation import ActivationField, activate, context_centroid
from .embedding import EmbeddingProvider
from .params import EngineParams
from .store import (
    EdgeKind,
    FragmentId,
    FragmentState,
    MemoryFragment,
    MemoryStore,
    MutationCause,
)

logger = logging.getLogger(__name__)

FACTORS = ("sim", "act", "rec", "reinf", "ctx")


class StaleResults(RuntimeError):
    """The store changed between retrieve and apply_mutation."""


def recency_weight(age_seconds: float, decay_rate: float) -> float:
    if age_seconds < 0:
        raise ValueError(f"negative age {age_seconds}")
    if decay_rate < 0:
        raise ValueError(f"negative decay rate {decay_rate}")
    return math.exp(-decay_rate * age_seconds)


@dataclass
class RetrievalResult:
    fragment_id: FragmentId
    score: float
    sim: float
    act: float
    rec: float
    reinf: float
    ctx: float
    content: str = ""
    rank: int = 0
    woke: bool = False

    @property
    def factors(self) -> tuple[float, float, float, float, float]:
        return (self.sim, self.act, self.rec, self.reinf, self.ctx)


def combine(factors: Sequence[float], weights: Sequence[float]) -> float:
    return sum(w * f for w, f in zip(weights, factors))


def score(
    fragment: MemoryFragment,
    query_vec: np.ndarray,
    fld: ActivationField | None,
    context_vec: np.ndarray | None,
    now: float,
    params: EngineParams,
) -> RetrievalResult:
    sim = max(0.0, min(1.0, float(np.dot(query_vec, fragment.embedding))))
    act = fld.level(fragment.id) if fld is not None else 0.0
    rec = recency_weight(max(0.0, now - fragment.last_accessed_at), params.decay_rate)
    reinf = min(fragment.reinforcement, 5.0) / 5.0
    ctx = 0.0
    if context_vec is not None:
        ctx = max(0.0, min(1.0, float(np.dot(context_vec, fragment.embedding))))
    factors = (sim, act, rec, reinf, ctx)
    return RetrievalResult(
        fragment.id, combine(factors, params.weights), *factors, content=fragment.content,
    )


@dataclass
class RetrievalOutcome:
    query: str
    k: int
    now: float
    results: list[RetrievalResult]
    candidates: list[RetrievalResult]
    field: ActivationField
    store_version: int


def default_now(store: MemoryStore) -> float:
    clock = store.meta.get("clock")
    if clock is not None:
        return float(clock)
    return max((f.last_accessed_at for f in store), default=0.0)


def retrieve(
    store: MemoryStore,
    embedder: EmbeddingProvider,
    query_text: str,
    k: int = 5,
    context_texts: Sequence[str] = (),
    now: float | None = None,
) -> RetrievalOutcome:
    """Rank fragments for a query without touching the store."""
    if not query_text or not query_text.strip():
        raise ValueError("empty query")
    if k < 1:
        raise ValueError("k must be >= 1")
    params = store.params
    now = default_now(store) if now is None else float(now)
    qvec = embedder.embed(query_text)
    fld = activate(store, embedder, query_text, context_texts)
    ctx_vec = context_centroid(embedder, context_texts, params.context_buffer)

    ids, sims = store.similarities(qvec, include_dormant=True)
    scored: list[RetrievalResult] = []
    for fid, cos in zip(ids, sims):
        frag = store.fragments[fid]
        sim = max(0.0, float(cos))
        if frag.state is FragmentState.DORMANT:
            if sim < params.wake_threshold:
                continue
        elif sim <= 0.0 and fld.level(fid) <= 0.0:
            continue
        res = score(frag, qvec, fld, ctx_vec, now, params)
        res.woke = frag.state is FragmentState.DORMANT
        scored.append(res)
    scored.sort(key=lambda r: (-r.score, r.fragment_id))
    for i, res in enumerate(scored, 1):
        res.rank = i
    return RetrievalOutcome(query_text, k, now, scored[:k], scored, fld, store.version)


@dataclass
class MutationReceipt:
    reinforced: list[tuple[FragmentId, float]] = field(default_factory=list)
    suppressed: list[tuple[FragmentId, float]] = field(default_factory=list)
    associations: list[tuple[FragmentId, FragmentId, float]] = field(default_factory=list)
    woken: list[FragmentId] = field(default_factory=list)


def near_misses(outcome: RetrievalOutcome, params: EngineParams) -> list[RetrievalResult]:
    if not outcome.results:
        return []
    cutoff = outcome.results[-1].score * params.near_miss_ratio
    k = len(outcome.results)
    return [r for r in outcome.candidates[k:k + params.near_miss_count] if r.score >= cutoff]


def apply_mutation(store: MemoryStore, outcome: RetrievalOutcome, now: float | None = None) -> MutationReceipt:
    """Reinforce returned fragments, suppress near misses, link co-retrievals."""
    if store.version != outcome.store_version:
        raise StaleResults(
            f"store moved from version {outcome.store_version} to {store.version} since retrieve"
        )
    params = store.params
    now = outcome.now if now is None else float(now)
    receipt = MutationReceipt()

    for res in outcome.results:
        frag = store.get(res.fragment_id)
        changes = {
            "reinforcement": frag.reinforcement + params.reinforce_step,
            "last_accessed_at": max(frag.last_accessed_at, now),
        }
        if frag.state is FragmentState.DORMANT:
            changes["state"] = FragmentState.ACTIVE
            receipt.woken.append(frag.id)
        store.update(frag.id, MutationCause.RETRIEVAL_REINFORCE, now, **changes)
        receipt.reinforced.append((frag.id, params.reinforce_step))

    for res in near_misses(outcome, params):
        frag = store.get(res.fragment_id)
        old = frag.reinforcement
        new = max(0.0, old - params.suppress_step)
        store.update(frag.id, MutationCause.SUPPRESSION, now, reinforcement=new)
        receipt.suppressed.append((frag.id, new - old))

    top = [r.fragment_id for r in outcome.results[: min(outcome.k, params.assoc_pairs_top)]]
    for a, b in combinations(sorted(top), 2):
        edge = store.edge(a, b, EdgeKind.ASSOCIATIVE) or store.edge(b, a, EdgeKind.ASSOCIATIVE)
        if edge is None:
            edge = store.connect(a, b, EdgeKind.ASSOCIATIVE, params.assoc_initial, now)
        else:
            store.bump_edge(edge, params.assoc_step, now)
        receipt.associations.append((a, b, edge.weight))

    logger.debug(
        "mutation reinforced=%d suppressed=%d linked=%d",
        len(receipt.reinforced), len(receipt.suppressed), len(receipt.associations),
    )
    return receipt
