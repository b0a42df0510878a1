"""Damped spreading activation over the memory graph.

Seeds come from the closest active fragments to the query (and, at half the
budget, to the context centroid). Each hop pushes only the activation a node
*gained* on the previous hop, so a contribution that travelled ``h`` edges
from a seed with level ``a0`` is at most ``a0 * damping**h``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .embedding import EmbeddingProvider, centroid
from .params import EngineParams
from .store import FragmentId, FragmentState, MemoryStore, fid_hex

logger = logging.getLogger(__name__)


class TraceStep(NamedTuple):
    hop: int
    source: FragmentId
    target: FragmentId
    kind: str
    contribution: float

    def to_record(self) -> dict:
        return {
            "hop": self.hop,
            "from": fid_hex(self.source),
            "to": fid_hex(self.target),
            "kind": self.kind,
            "contribution": self.contribution,
        }


@dataclass
class ActivationField:
    levels: dict[FragmentId, float] = field(default_factory=dict)
    trace: list[TraceStep] = field(default_factory=list)
    dormant: set[FragmentId] = field(default_factory=set)

    def level(self, fid: FragmentId) -> float:
        return self.levels.get(fid, 0.0)

    def ranked(self) -> list[tuple[FragmentId, float]]:
        return sorted(self.levels.items(), key=lambda kv: (-kv[1], kv[0]))

    def copy(self) -> "ActivationField":
        return ActivationField(dict(self.levels), list(self.trace), set(self.dormant))

    def touched(self) -> int:
        return len({s.target for s in self.trace if s.hop > 0})


def seed_vector(store: MemoryStore, vec: np.ndarray, k: int) -> ActivationField:
    """Top-``k`` active fragments by cosine; activation = cosine clipped to
    [0, 1]. Non-positive matches are not seeded."""
    fld = ActivationField()
    for fid, sim in store.search(vec, k):
        level = min(1.0, max(0.0, sim))
        if level <= 0.0:
            continue
        fld.levels[fid] = level
        fld.trace.append(TraceStep(0, fid, fid, "seed", level))
    return fld


def seed(store: MemoryStore, embedder: EmbeddingProvider, query_text: str, k: int | None = None) -> ActivationField:
    if not query_text or not query_text.strip():
        raise ValueError("empty query")
    k = store.params.seed_k if k is None else k
    return seed_vector(store, embedder.embed(query_text), k)


def spread(store: MemoryStore, fld: ActivationField, params: EngineParams | None = None) -> ActivationField:
    """Propagate ``fld`` for up to ``max_hops`` hops and return a new field."""
    params = params or store.params
    out = fld.copy()
    levels = out.levels
    gained = dict(levels)  # what each frontier node pushes this hop
    frontier = sorted(gained, key=lambda f: (-gained[f], f))
    for hop in range(1, params.max_hops + 1):
        if not frontier:
            break
        start = dict(levels)
        for u in frontier:
            push = gained[u]
            for v, edge in store.neighbors(u)[: params.fan_out]:
                c = params.damping * edge.weight * push
                if c < params.activation_floor:
                    continue
                levels[v] = min(1.0, levels.get(v, 0.0) + c)
                out.trace.append(TraceStep(hop, u, v, edge.kind.value, c))
        gained = {v: levels[v] - start.get(v, 0.0) for v in levels if levels[v] > start.get(v, 0.0)}
        frontier = sorted(gained, key=lambda f: (-levels[f], f))
    out.dormant = {f for f in levels if store.fragments[f].state is FragmentState.DORMANT}
    return out


def context_centroid(embedder: EmbeddingProvider, context_texts: Sequence[str], limit: int = 8) -> np.ndarray | None:
    vecs = []
    for text in list(context_texts)[-limit:]:
        try:
            vecs.append(embedder.embed(text))
        except ValueError:
            continue
    return centroid(vecs)


def merge_max(a: ActivationField, b: ActivationField) -> ActivationField:
    out = a.copy()
    for fid, level in b.levels.items():
        if level > out.levels.get(fid, 0.0):
            out.levels[fid] = level
    out.trace.extend(s for s in b.trace if s.hop == 0 and a.levels.get(s.target, 0.0) < s.contribution)
    return out


def activate(
    store: MemoryStore,
    embedder: EmbeddingProvider,
    query_text: str,
    context_texts: Sequence[str] = (),
    k: int | None = None,
) -> ActivationField:
    """Seed from the query and the context centroid, then spread."""
    k = store.params.seed_k if k is None else k
    fld = seed(store, embedder, query_text, k)
    ctx = context_centroid(embedder, context_texts, store.params.context_buffer)
    if ctx is not None and k // 2 > 0:
        fld = merge_max(fld, seed_vector(store, ctx, k // 2))
    fld = spread(store, fld)
    if logger.isEnabledFor(logging.DEBUG):
        for step in fld.trace:
            logger.debug("activation %s", json.dumps(step.to_record(), sort_keys=True))
    return fld
