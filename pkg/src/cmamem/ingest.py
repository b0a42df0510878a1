"""Observation ingest: salience, temporal labelling, novelty merging,
episode segmentation, edge creation and capacity enforcement."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .embedding import EmbeddingProvider, load_wordlist, tokenize
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
    parse_fid,
)
from .summarize import ExtractiveSummarizer, Summarizer

logger = logging.getLogger(__name__)

_CAPS_RE = re.compile(r"\b[A-Za-z]{2,}\b")

FIRST_PERSON = frozenset({"i", "me", "my", "mine", "myself", "we", "us", "our", "ours", "ourselves"})
TIME_WORDS = frozenset("""
today yesterday tomorrow tonight morning afternoon evening night noon midnight ago last next
now recently earlier later soon weekend monday tuesday wednesday thursday friday saturday sunday
january february march april may june july august september october november december am pm
""".split())
PAST_WORDS = frozenset("""
was were had did saw went got came made took met ate ran said told found left felt thought
bought brought caught drove flew forgot gave heard kept knew lost paid put sat sent slept spent
stood taught tripped wore won wrote
""".split())
_CLOCK_RE = re.compile(r"^\d{1,2}(am|pm)$|^\d{1,2}h\d{2}$")


class ClockRegression(ValueError):
    pass


@lru_cache(maxsize=None)
def _lexicons():
    affect = frozenset(load_wordlist("affect_lexicon_v1.txt"))
    markers = tuple(tuple(m.split()) for m in load_wordlist("markers_v1.txt"))
    habitual = frozenset(load_wordlist("habitual_v1.txt"))
    return affect, markers, habitual


def _contains_phrase(tokens: list[str], phrase: tuple[str, ...]) -> bool:
    n = len(phrase)
    return any(tuple(tokens[i:i + n]) == phrase for i in range(len(tokens) - n + 1))


def score_salience(text: str) -> float:
    """Lexicon heuristic approximating affective intensity, in [0, 1]."""
    if not text or not text.strip():
        raise ValueError("empty text")
    affect, markers, _ = _lexicons()
    tokens = tokenize(text)
    score = 0.3 + 0.1 * min(sum(t in affect for t in tokens), 4)
    if "!" in text or any(w.isupper() for w in _CAPS_RE.findall(text)):
        score += 0.1
    if any(_contains_phrase(tokens, m) for m in markers):
        score += 0.2
    return min(1.0, max(0.0, round(score, 10)))


def _is_past(token: str) -> bool:
    return token in PAST_WORDS or (len(token) > 4 and token.endswith("ed"))


def classify_temporal(text: str, has_session_timestamp: bool) -> TemporalClass:
    if not text or not text.strip():
        raise ValueError("empty text")
    _, _, habitual = _lexicons()
    tokens = tokenize(text)
    if any(t in habitual for t in tokens):
        return TemporalClass.HABITUAL
    first_person = any(t in FIRST_PERSON for t in tokens)
    time_ref = any(t in TIME_WORDS or _CLOCK_RE.match(t) for t in tokens)
    past = any(_is_past(t) for t in tokens)
    if not (first_person or time_ref or past):
        return TemporalClass.TIMELESS
    return TemporalClass.EPISODIC if has_session_timestamp else TemporalClass.TIMELESS


def detect_novelty(vec: np.ndarray, store: MemoryStore, threshold: float | None = None) -> FragmentId | None:
    """Closest active fragment at or above the merge threshold, if any."""
    threshold = store.params.merge_threshold if threshold is None else threshold
    hits = store.search(vec, 1)
    if hits and hits[0][1] >= threshold:
        return hits[0][0]
    return None


def segment_episode(prev_ts: float, ts: float, session_changed: bool, gap: float = 1800.0) -> bool:
    if ts < prev_ts:
        raise ClockRegression(f"timestamp {ts} precedes {prev_ts}")
    return session_changed or (ts - prev_ts) > gap


def retention(frag: MemoryFragment, now: float, decay_rate: float) -> float:
    age = max(0.0, now - frag.created_at)
    return 0.4 * frag.salience + 0.4 * min(frag.reinforcement, 5.0) / 5.0 + 0.2 * math.exp(-decay_rate * age)


def enforce_capacity(store: MemoryStore, now: float) -> list[FragmentId]:
    """Evict lowest-retention fragments until the store fits its capacity.

    Gists, insights and anything referenced as lineage are never evicted.
    """
    evicted: list[FragmentId] = []
    capacity = store.params.capacity
    while len(store) > capacity:
        protected = store.lineage_sources()
        candidates = [
            f for f in store
            if f.kind not in (FragmentKind.GIST, FragmentKind.INSIGHT) and f.id not in protected
        ]
        if not candidates:
            logger.warning("capacity %d exceeded but every fragment is exempt", capacity)
            break
        victim = min(candidates, key=lambda f: (retention(f, now, store.params.decay_rate), f.id))
        store.evict(victim.id, now, reason="capacity")
        logger.info("evicted %s at capacity %d", fid_hex(victim.id), capacity)
        evicted.append(victim.id)
    return evicted


@dataclass
class IngestOutcome:
    status: str  # "created" | "merged"
    fragment_id: FragmentId
    edges_created: int = 0
    evicted: list[FragmentId] = field(default_factory=list)

    @property
    def merged(self) -> bool:
        return self.status == "merged"


def session_state(store: MemoryStore, session_id: str) -> dict | None:
    return store.meta.get(f"session/{session_id}")


def session_buffer(store: MemoryStore, session_id: str) -> list[str]:
    state = session_state(store, session_id)
    return list(state["buffer"]) if state else []


class Ingestor:
    """Turns raw observations into fragments in ``store``."""

    def __init__(self, store: MemoryStore, embedder: EmbeddingProvider,
                 summarizer: Summarizer | None = None):
        self.store = store
        self.embedder = embedder
        self.summarizer = summarizer or ExtractiveSummarizer()

    def ingest(self, text: str, session_id: str, ts: float, source: str = "observation") -> IngestOutcome:
        store, params = self.store, self.store.params
        if not isinstance(text, str) or not text.strip():
            raise ValueError("empty text")
        ts = float(ts)
        clock = store.meta.get("clock")
        if clock is not None and ts < clock:
            raise ClockRegression(f"timestamp {ts} precedes last ingested {clock}")

        oversize = len(text) > params.size_threshold
        stored_text = self.summarizer.summarize(text) if oversize else text
        vec = self.embedder.embed(stored_text)
        salience = score_salience(text)

        state = session_state(store, session_id)
        buffer = (list(state["buffer"]) if state else []) + [text]
        buffer = buffer[-params.context_buffer:]

        match = detect_novelty(vec, store)
        if match is not None:
            frag = store.get(match)
            store.update(
                match, MutationCause.MERGE, ts, merged_text=text,
                reinforcement=frag.reinforcement + params.reinforce_step,
                salience=max(frag.salience, salience),
                last_accessed_at=max(frag.last_accessed_at, ts),
            )
            new_state = dict(state) if state else {"episode_id": None, "last_fragment": None}
            new_state.update(last_ts=ts, buffer=buffer)
            store.set_meta(f"session/{session_id}", new_state)
            store.set_meta("clock", ts)
            return IngestOutcome("merged", match)

        if state is None:
            new_episode = True
        else:
            new_episode = segment_episode(state["last_ts"], ts, False, params.episode_gap)
        if new_episode or state.get("episode_id") is None:
            episode_id = store.meta.get("next_episode", 1)
            store.set_meta("next_episode", episode_id + 1)
            prev = None
        else:
            episode_id = state["episode_id"]
            prev = parse_fid(state["last_fragment"]) if state.get("last_fragment") else None

        lineage: list[FragmentId] = []
        kind = FragmentKind.RAW
        if oversize:
            archive = MemoryFragment(
                content=text, embedding=self.embedder.embed(text), created_at=ts,
                session_id=session_id, episode_id=episode_id, salience=salience,
                temporal_class=classify_temporal(text, True), state=FragmentState.DORMANT,
                provenance=Provenance(source="archive"),
            )
            lineage = [store.add_fragment(archive)]
            kind = FragmentKind.SUMMARY

        frag = MemoryFragment(
            content=stored_text, embedding=vec, created_at=ts,
            session_id=session_id, episode_id=episode_id, salience=salience,
            temporal_class=classify_temporal(text, True), kind=kind,
            provenance=Provenance(source=source, lineage=lineage),
        )
        fid = store.add_fragment(frag)
        edges = 0
        for parent in lineage:
            store.connect(fid, parent, EdgeKind.DERIVED, 1.0, ts)
        if prev is not None and prev in store:
            store.connect(prev, fid, EdgeKind.TEMPORAL, params.temporal_edge_weight, ts)
            edges += 1
        semantic = 0
        for other, sim in store.search(vec, params.max_semantic_edges + 1):
            if other == fid:
                continue
            if sim < params.semantic_threshold or semantic >= params.max_semantic_edges:
                break
            store.connect(fid, other, EdgeKind.SEMANTIC, min(1.0, sim), ts)
            semantic += 1
        edges += semantic

        store.set_meta(f"session/{session_id}", {
            "episode_id": episode_id, "last_fragment": fid_hex(fid), "last_ts": ts, "buffer": buffer,
        })
        store.set_meta("clock", ts)
        evicted = enforce_capacity(store, ts)
        return IngestOutcome("created", fid, edges, evicted)

