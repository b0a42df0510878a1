"""Offline consolidation: replay, cluster abstraction, gist extraction and
dormancy. Nothing here deletes a fragment."""

from __future__ import annotations

import logging
import math
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .embedding import EmbeddingProvider, centroid
from .store import (
    EdgeKind,
    FragmentId,
    FragmentKind,
    FragmentState,
    MemoryFragment,
    MemoryStore,
    MutationCause,
    Provenance,
    TemporalClass,
    fid_hex,
)
from .summarize import ExtractiveSummarizer, Summarizer

logger = logging.getLogger(__name__)


@dataclass
class ReplayResult:
    chains: int = 0
    edge_deltas: list[tuple[FragmentId, FragmentId, float]] = field(default_factory=list)
    reinforced: list[FragmentId] = field(default_factory=list)


@dataclass
class ConsolidationReport:
    now: float
    replayed_chains: int = 0
    edge_deltas: list[tuple[FragmentId, FragmentId, float]] = field(default_factory=list)
    insights: list[FragmentId] = field(default_factory=list)
    gists: list[FragmentId] = field(default_factory=list)
    dormant: list[FragmentId] = field(default_factory=list)
    duration_ms: float = 0.0

    def to_dict(self) -> dict:
        return {
            "now": self.now,
            "replayed_chains": self.replayed_chains,
            "edge_deltas": [
                {"from": fid_hex(a), "to": fid_hex(b), "delta": d} for a, b, d in self.edge_deltas
            ],
            "insights": [fid_hex(x) for x in self.insights],
            "gists": [fid_hex(x) for x in self.gists],
            "dormant": [fid_hex(x) for x in self.dormant],
            "duration_ms": self.duration_ms,
        }


def temporal_chains(store: MemoryStore) -> list[list[FragmentId]]:
    """Fragments joined by temporal edges, grouped per chain in time order."""
    parent: dict[FragmentId, FragmentId] = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (src, dst, kind) in store.edges:
        if kind is EdgeKind.TEMPORAL:
            parent[find(src)] = find(dst)
    groups: dict[FragmentId, list[FragmentId]] = defaultdict(list)
    for fid in parent:
        groups[find(fid)].append(fid)
    chains = [sorted(g, key=lambda f: (store.fragments[f].created_at, f)) for g in groups.values()]
    return sorted(chains, key=lambda c: c[0])


def replay(store: MemoryStore, window_seconds: float, now: float) -> ReplayResult:
    """Strengthen temporal chains whose newest fragment falls inside the window.

    An edge is replayed at most once per ``now``, so repeated ticks at the
    same instant leave the store unchanged.
    """
    params = store.params
    out = ReplayResult()
    for chain in temporal_chains(store):
        newest = max(store.fragments[f].created_at for f in chain)
        if now - newest > window_seconds:
            continue
        members = set(chain)
        edges = sorted(
            (e for f in chain for e in store.incident(f)
             if e.kind is EdgeKind.TEMPORAL and e.source in members and e.source == f),
            key=lambda e: (store.fragments[e.source].created_at, e.source, e.target),
        )
        touched: list[FragmentId] = []
        for edge in edges:
            if edge.last_replayed_at is not None and edge.last_replayed_at >= now:
                continue
            delta = store.bump_edge(edge, params.replay_step, now, replay=True)
            out.edge_deltas.append((edge.source, edge.target, delta))
            for fid in (edge.source, edge.target):
                if fid not in touched:
                    touched.append(fid)
        if not touched:
            continue
        out.chains += 1
        for fid in sorted(touched):
            frag = store.fragments[fid]
            store.update(fid, MutationCause.REPLAY, now, reinforcement=frag.reinforcement + params.replay_step)
            out.reinforced.append(fid)
    return out


def _semantic_degree(store: MemoryStore, fid: FragmentId) -> int:
    return sum(1 for e in store.incident(fid) if e.kind is EdgeKind.SEMANTIC)


def greedy_clusters(store: MemoryStore, threshold: float) -> list[list[FragmentId]]:
    """Partition active raw fragments: seed from the unclustered fragment with
    the most semantic edges, absorb fragments close to the running centroid."""
    raw = [f for f in sorted(store.fragments) if store.fragments[f].kind is FragmentKind.RAW
           and store.fragments[f].state is FragmentState.ACTIVE]
    degree = {f: _semantic_degree(store, f) for f in raw}
    unclustered = set(raw)
    clusters = []
    while unclustered:
        seed = min(unclustered, key=lambda f: (-degree[f], f))
        members = [seed]
        total = store.fragments[seed].embedding.copy()
        for fid in raw:
            if fid == seed or fid not in unclustered:
                continue
            c = total / np.linalg.norm(total)
            if float(np.dot(c, store.fragments[fid].embedding)) >= threshold:
                members.append(fid)
                total = total + store.fragments[fid].embedding
        unclustered.difference_update(members)
        clusters.append(sorted(members))
    return clusters


def _covered(store: MemoryStore, kind: FragmentKind, members: set, coverage: float) -> bool:
    for frag in store:
        if frag.kind is kind and len(members & set(frag.provenance.lineage)) >= coverage * len(members):
            return True
    return False


def _derive(store: MemoryStore, embedder: EmbeddingProvider, content: str, kind: FragmentKind,
            lineage: list[FragmentId], now: float, source: str) -> FragmentId:
    sources = [store.fragments[f] for f in lineage]
    frag = MemoryFragment(
        content=content,
        embedding=embedder.embed(content),
        created_at=now,
        session_id="consolidation",
        episode_id=0,
        salience=max(f.salience for f in sources),
        temporal_class=TemporalClass.TIMELESS,
        kind=kind,
        provenance=Provenance(source=source, lineage=list(lineage)),
    )
    fid = store.add_fragment(frag)
    for parent in lineage:
        store.connect(fid, parent, EdgeKind.DERIVED, 1.0, now)
    return fid


def abstract_clusters(store: MemoryStore, embedder: EmbeddingProvider, now: float,
                      min_size: int | None = None, summarizer: Summarizer | None = None) -> list[FragmentId]:
    params = store.params
    min_size = params.cluster_min_size if min_size is None else min_size
    if min_size < 2:
        raise ValueError("min_size must be >= 2")
    summarizer = summarizer or ExtractiveSummarizer()
    created = []
    for members in greedy_clusters(store, params.cluster_threshold):
        if len(members) < min_size:
            continue
        if _covered(store, FragmentKind.INSIGHT, set(members), params.cluster_coverage):
            continue
        content = summarizer.abstract([store.fragments[f].content for f in members])
        fid = _derive(store, embedder, content, FragmentKind.INSIGHT, members, now, "abstraction")
        logger.info("insight %s from %d fragments", fid_hex(fid), len(members))
        created.append(fid)
    return created


def episode_groups(store: MemoryStore, threshold: float, min_episodes: int) -> list[list[int]]:
    """Sets of episodes whose centroids are pairwise similar."""
    episodes: dict[int, list[MemoryFragment]] = defaultdict(list)
    for fid in sorted(store.fragments):
        frag = store.fragments[fid]
        if frag.kind is FragmentKind.RAW and frag.episode_id > 0 and frag.provenance.source != "archive":
            episodes[frag.episode_id].append(frag)
    cents = {e: centroid(f.embedding for f in frags) for e, frags in episodes.items()}
    order = sorted(e for e in cents if cents[e] is not None)
    grouped: set[int] = set()
    groups = []
    for e in order:
        if e in grouped:
            continue
        group = [e]
        for other in order:
            if other <= e or other in grouped:
                continue
            if all(float(np.dot(cents[other], cents[g])) >= threshold for g in group):
                group.append(other)
        if len(group) >= min_episodes:
            groups.append(group)
            grouped.update(group)
    return groups


def _gist_covers(store: MemoryStore, group: list[int], coverage: float) -> bool:
    wanted = set(group)
    for frag in store:
        if frag.kind is FragmentKind.GIST:
            episodes = {store.fragments[x].episode_id for x in frag.provenance.lineage}
            if len(episodes & wanted) >= coverage * len(wanted):
                return True
    return False


def extract_gist(store: MemoryStore, embedder: EmbeddingProvider, now: float,
                 summarizer: Summarizer | None = None) -> list[FragmentId]:
    params = store.params
    summarizer = summarizer or ExtractiveSummarizer()
    by_episode: dict[int, list[MemoryFragment]] = defaultdict(list)
    for frag in store:
        by_episode[frag.episode_id].append(frag)
    created = []
    for group in episode_groups(store, params.gist_threshold, params.gist_min_episodes):
        frags = [f for e in group for f in sorted(by_episode[e], key=lambda f: f.id)
                 if f.kind is FragmentKind.RAW and f.provenance.source != "archive"]
        group_centroid = centroid(f.embedding for f in frags)
        reps = []
        for e in group:
            members = [f for f in frags if f.episode_id == e]
            best = min(members, key=lambda f: (-float(np.dot(group_centroid, f.embedding)), f.id))
            reps.append(best.id)
        if _gist_covers(store, group, params.cluster_coverage):
            continue
        content = summarizer.gist([f.content for f in frags], len(group))
        fid = _derive(store, embedder, content, FragmentKind.GIST, reps, now, "gist")
        logger.info("gist %s from episodes %s", fid_hex(fid), group)
        created.append(fid)
    return created


def accessibility(frag: MemoryFragment, now: float, decay_rate: float) -> float:
    rec = math.exp(-decay_rate * max(0.0, now - frag.last_accessed_at))
    return 0.4 * rec + 0.4 * min(frag.reinforcement, 5.0) / 5.0 + 0.2 * frag.salience


def decay_and_dormancy(store: MemoryStore, now: float) -> list[FragmentId]:
    params = store.params
    abstracted = set()
    for frag in store:
        if frag.kind in (FragmentKind.INSIGHT, FragmentKind.GIST):
            abstracted.update(frag.provenance.lineage)
    dormant = []
    for fid in sorted(store.fragments):
        frag = store.fragments[fid]
        if frag.kind is not FragmentKind.RAW or frag.state is not FragmentState.ACTIVE:
            continue
        threshold = params.dormancy_threshold
        if fid in abstracted:
            threshold *= params.abstraction_fade
        if accessibility(frag, now, params.decay_rate) < threshold:
            store.update(fid, MutationCause.DECAY, now, state=FragmentState.DORMANT)
            dormant.append(fid)
    return dormant


def consolidate_tick(store: MemoryStore, embedder: EmbeddingProvider, now: float,
                     summarizer: Summarizer | None = None,
                     clock: Callable[[], float] | None = time.perf_counter) -> ConsolidationReport:
    """replay -> abstraction -> gist extraction -> dormancy, in that order.

    ``clock=None`` reports a zero duration so the report is reproducible.
    """
    started = clock() if clock else 0.0
    params = store.params
    report = ConsolidationReport(now=float(now))
    rep = replay(store, params.replay_window, now)
    report.replayed_chains = rep.chains
    report.edge_deltas = rep.edge_deltas
    report.insights = abstract_clusters(store, embedder, now, summarizer=summarizer)
    report.gists = extract_gist(store, embedder, now, summarizer=summarizer)
    report.dormant = decay_and_dormancy(store, now)
    if clock:
        report.duration_ms = (clock() - started) * 1000.0
    return report
