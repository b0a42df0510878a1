"""Memory graph substrate with write-ahead log and JSON snapshots.

Every mutation is expressed as one WAL record and applied through the same
``_apply_*`` routine whether it is fresh or replayed, so replaying a log from
an empty store reproduces the state a snapshot at that offset would hold.
"""

from __future__ import annotations

import base64
import json
import logging
import math
import os
import zlib
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Iterator

import numpy as np

from .params import EngineParams

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

FragmentId = int


class TemporalClass(str, Enum):
    EPISODIC = "episodic"
    HABITUAL = "habitual"
    TIMELESS = "timeless"


class FragmentState(str, Enum):
    ACTIVE = "active"
    DORMANT = "dormant"


class FragmentKind(str, Enum):
    RAW = "raw"
    SUMMARY = "summary"
    INSIGHT = "insight"
    GIST = "gist"


class EdgeKind(str, Enum):
    SEMANTIC = "semantic"
    TEMPORAL = "temporal_followed_by"
    ASSOCIATIVE = "associative"
    DERIVED = "derived_from"


class MutationCause(str, Enum):
    RETRIEVAL_REINFORCE = "retrieval_reinforce"
    SUPPRESSION = "suppression"
    MERGE = "merge"
    REPLAY = "replay"
    DECAY = "decay"
    EVICTION = "eviction"
    CONSOLIDATION = "consolidation"


ALL_EDGE_KINDS = frozenset(EdgeKind)
_LOGGED_FIELDS = ("salience", "reinforcement", "state")
_UPDATABLE = {"salience", "reinforcement", "state", "last_accessed_at"}


class StoreError(Exception):
    pass


class InvariantError(StoreError, ValueError):
    """A fragment or edge would break a store invariant."""


class FragmentNotFound(StoreError, KeyError):
    def __init__(self, fid: FragmentId, tombstone: dict | None = None):
        self.fid = fid
        self.tombstone = tombstone
        reason = f" (evicted: {tombstone['reason']})" if tombstone else ""
        super().__init__(f"fragment {fid_hex(fid)} not found{reason}")

    def __str__(self):
        return self.args[0]


class StoreCorruption(StoreError):
    """Snapshot or WAL content failed validation."""


def fid_hex(fid: FragmentId) -> str:
    return f"{fid:032x}"


def parse_fid(text: str) -> FragmentId:
    return int(text, 16)


def _encode_vec(vec: np.ndarray) -> str:
    return base64.b64encode(np.asarray(vec, dtype="<f8").tobytes()).decode("ascii")


def _decode_vec(text: str) -> np.ndarray:
    return np.frombuffer(base64.b64decode(text), dtype="<f8").copy()


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


@dataclass
class Provenance:
    source: str = "observation"
    lineage: list[FragmentId] = field(default_factory=list)
    merged: list[str] = field(default_factory=list)


@dataclass
class MemoryFragment:
    content: str
    embedding: np.ndarray
    created_at: float
    session_id: str = ""
    episode_id: int = 0
    salience: float = 0.3
    reinforcement: float = 0.0
    temporal_class: TemporalClass = TemporalClass.EPISODIC
    state: FragmentState = FragmentState.ACTIVE
    kind: FragmentKind = FragmentKind.RAW
    provenance: Provenance = field(default_factory=Provenance)
    last_accessed_at: float | None = None
    id: FragmentId | None = None

    def __post_init__(self):
        if self.last_accessed_at is None:
            self.last_accessed_at = self.created_at
        self.temporal_class = TemporalClass(self.temporal_class)
        self.state = FragmentState(self.state)
        self.kind = FragmentKind(self.kind)

    def validate(self, dim: int | None = None) -> None:
        if not isinstance(self.content, str) or not self.content.strip():
            raise InvariantError("content must be non-empty text")
        emb = np.asarray(self.embedding, dtype=np.float64)
        if emb.ndim != 1 or (dim is not None and emb.shape[0] != dim):
            raise InvariantError(f"embedding must be a vector of length {dim}")
        norm = float(np.linalg.norm(emb))
        if not math.isfinite(norm) or abs(norm - 1.0) > 1e-6:
            raise InvariantError(f"embedding norm {norm:.6g} is not 1")
        if not 0.0 <= self.salience <= 1.0:
            raise InvariantError(f"salience {self.salience} outside [0, 1]")
        if not self.reinforcement >= 0.0:
            raise InvariantError(f"reinforcement {self.reinforcement} is negative")
        if self.kind is not FragmentKind.RAW and not self.provenance.lineage:
            raise InvariantError(f"{self.kind.value} fragment needs a non-empty lineage")
        if self.last_accessed_at < self.created_at:
            raise InvariantError("last_accessed_at precedes created_at")

    def to_record(self) -> dict:
        return {
            "id": fid_hex(self.id),
            "content": self.content,
            "embedding": _encode_vec(self.embedding),
            "created_at": self.created_at,
            "last_accessed_at": self.last_accessed_at,
            "session_id": self.session_id,
            "episode_id": self.episode_id,
            "salience": self.salience,
            "reinforcement": self.reinforcement,
            "temporal_class": self.temporal_class.value,
            "state": self.state.value,
            "kind": self.kind.value,
            "provenance": {
                "source": self.provenance.source,
                "lineage": [fid_hex(x) for x in self.provenance.lineage],
                "merged": list(self.provenance.merged),
            },
        }

    @classmethod
    def from_record(cls, rec: dict) -> "MemoryFragment":
        prov = rec["provenance"]
        return cls(
            id=parse_fid(rec["id"]),
            content=rec["content"],
            embedding=_decode_vec(rec["embedding"]),
            created_at=rec["created_at"],
            last_accessed_at=rec["last_accessed_at"],
            session_id=rec["session_id"],
            episode_id=rec["episode_id"],
            salience=rec["salience"],
            reinforcement=rec["reinforcement"],
            temporal_class=rec["temporal_class"],
            state=rec["state"],
            kind=rec["kind"],
            provenance=Provenance(
                source=prov["source"],
                lineage=[parse_fid(x) for x in prov["lineage"]],
                merged=list(prov["merged"]),
            ),
        )


@dataclass
class Edge:
    source: FragmentId
    target: FragmentId
    kind: EdgeKind
    weight: float
    created_at: float
    last_reinforced_at: float
    last_replayed_at: float | None = None

    @property
    def key(self) -> tuple[FragmentId, FragmentId, EdgeKind]:
        return (self.source, self.target, self.kind)

    def other(self, fid: FragmentId) -> FragmentId:
        return self.target if fid == self.source else self.source

    def to_record(self) -> dict:
        return {
            "from": fid_hex(self.source),
            "to": fid_hex(self.target),
            "kind": self.kind.value,
            "weight": self.weight,
            "created_at": self.created_at,
            "last_reinforced_at": self.last_reinforced_at,
            "last_replayed_at": self.last_replayed_at,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Edge":
        return cls(
            source=parse_fid(rec["from"]),
            target=parse_fid(rec["to"]),
            kind=EdgeKind(rec["kind"]),
            weight=rec["weight"],
            created_at=rec["created_at"],
            last_reinforced_at=rec["last_reinforced_at"],
            last_replayed_at=rec["last_replayed_at"],
        )


@dataclass(frozen=True)
class MutationLogEntry:
    timestamp: float
    fragment_id: FragmentId
    field: str
    delta: float | str
    cause: MutationCause

    def to_record(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "fragment_id": fid_hex(self.fragment_id),
            "field": self.field,
            "delta": self.delta,
            "cause": self.cause.value,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "MutationLogEntry":
        return cls(rec["timestamp"], parse_fid(rec["fragment_id"]), rec["field"],
                   rec["delta"], MutationCause(rec["cause"]))


class _EmbeddingTable:
    """Row-per-fragment embedding matrix kept in creation order."""

    def __init__(self, dim: int):
        self.dim = dim
        self._rows = np.zeros((16, dim))
        self.ids: list[FragmentId] = []
        self._row_of: dict[FragmentId, int] = {}
        self._alive = np.zeros(16, dtype=bool)
        self._active = np.zeros(16, dtype=bool)

    def __len__(self):
        return len(self.ids)

    def add(self, fid: FragmentId, vec: np.ndarray, active: bool) -> None:
        n = len(self.ids)
        if n == self._rows.shape[0]:
            grow = max(16, n)
            self._rows = np.vstack([self._rows, np.zeros((grow, self.dim))])
            self._alive = np.concatenate([self._alive, np.zeros(grow, dtype=bool)])
            self._active = np.concatenate([self._active, np.zeros(grow, dtype=bool)])
        self._rows[n] = vec
        self._alive[n] = True
        self._active[n] = active
        self._row_of[fid] = n
        self.ids.append(fid)

    def remove(self, fid: FragmentId) -> None:
        row = self._row_of.pop(fid)
        self._alive[row] = False
        self._active[row] = False

    def set_active(self, fid: FragmentId, active: bool) -> None:
        self._active[self._row_of[fid]] = active

    def similarities(self, vec: np.ndarray, include_dormant: bool) -> tuple[list[FragmentId], np.ndarray]:
        n = len(self.ids)
        mask = self._alive[:n] if include_dormant else self._active[:n]
        rows = np.flatnonzero(mask)
        if rows.size == 0:
            return [], np.zeros(0)
        sims = self._rows[rows] @ vec
        return [self.ids[r] for r in rows], np.clip(sims, -1.0, 1.0)


def _checksum(seq: int, op: str, payload: dict) -> str:
    return f"{zlib.crc32(canonical_json([seq, op, payload]).encode('utf-8')):08x}"


class MemoryStore:
    """The memory graph plus its durable history.

    Single writer: callers serialise mutating calls. ``wal_path`` turns on
    append-only persistence of every WAL record as JSON lines.
    """

    def __init__(self, params: EngineParams | None = None, wal_path: str | os.PathLike | None = None):
        self._reset()
        self._wal_fh = None
        if wal_path is not None:
            self.attach_wal(wal_path)
        self._commit("init", {"params": (params or EngineParams()).validate().to_dict()})

    # -- state ---------------------------------------------------------

    def _reset(self, params: EngineParams | None = None) -> None:
        self.params = params or EngineParams()
        self.fragments: dict[FragmentId, MemoryFragment] = {}
        self.edges: dict[tuple[FragmentId, FragmentId, EdgeKind], Edge] = {}
        self._adj: dict[FragmentId, set] = defaultdict(set)
        self.tombstones: dict[FragmentId, dict] = {}
        self.mutation_log: list[MutationLogEntry] = []
        self.meta: dict[str, Any] = {}
        self.counters = {"next_counter": 1, "last_id_ms": 0, "wal_seq": 0}
        self.wal: list[dict] = []
        self._table = _EmbeddingTable(self.params.dim)

    @classmethod
    def _blank(cls) -> "MemoryStore":
        store = cls.__new__(cls)
        store._reset()
        store._wal_fh = None
        return store

    @property
    def version(self) -> int:
        """WAL offset; changes on every mutation."""
        return self.counters["wal_seq"]

    def attach_wal(self, path: str | os.PathLike) -> None:
        self.close()
        self._wal_fh = open(path, "a", encoding="utf-8")

    def close(self) -> None:
        if self._wal_fh is not None:
            self._wal_fh.close()
            self._wal_fh = None

    def __len__(self) -> int:
        return len(self.fragments)

    def __contains__(self, fid: FragmentId) -> bool:
        return fid in self.fragments

    def __iter__(self) -> Iterator[MemoryFragment]:
        return iter(self.fragments.values())

    def get(self, fid: FragmentId) -> MemoryFragment:
        try:
            return self.fragments[fid]
        except KeyError:
            raise FragmentNotFound(fid, self.tombstones.get(fid)) from None

    def count(self, state: FragmentState | None = None) -> int:
        if state is None:
            return len(self.fragments)
        return sum(1 for f in self.fragments.values() if f.state is state)

    # -- WAL plumbing --------------------------------------------------

    def _commit(self, op: str, payload: dict) -> Any:
        seq = self.counters["wal_seq"] + 1
        record = {
            "schema_version": SCHEMA_VERSION,
            "seq": seq,
            "op": op,
            "payload": payload,
            "checksum": _checksum(seq, op, payload),
        }
        result = self._apply(record)
        self.wal.append(record)
        if self._wal_fh is not None:
            self._wal_fh.write(canonical_json(record) + "\n")
            self._wal_fh.flush()
        return result

    def _apply(self, record: dict) -> Any:
        handler = getattr(self, f"_apply_{record['op']}", None)
        if handler is None:
            raise StoreCorruption(f"unknown WAL op {record['op']!r}")
        result = handler(record["payload"])
        self.counters["wal_seq"] = record["seq"]
        return result

    @staticmethod
    def verify_record(record: dict, expected_seq: int | None = None) -> None:
        try:
            if record["schema_version"] != SCHEMA_VERSION:
                raise StoreCorruption(f"unsupported WAL schema_version {record['schema_version']}")
            ok = record["checksum"] == _checksum(record["seq"], record["op"], record["payload"])
        except (KeyError, TypeError) as exc:
            raise StoreCorruption(f"malformed WAL record: {exc}") from None
        if not ok:
            raise StoreCorruption(f"WAL checksum mismatch at seq {record['seq']}")
        if expected_seq is not None and record["seq"] != expected_seq:
            raise StoreCorruption(f"WAL gap: expected seq {expected_seq}, got {record['seq']}")

    def replay(self, records: Iterable[dict]) -> int:
        """Apply WAL records in order; returns how many were applied."""
        applied = 0
        for rec in records:
            self.verify_record(rec, self.counters["wal_seq"] + 1)
            self._apply(rec)
            self.wal.append(rec)
            applied += 1
        return applied

    @classmethod
    def from_wal(cls, records: Iterable[dict]) -> "MemoryStore":
        store = cls._blank()
        store.replay(records)
        return store

    @staticmethod
    def read_wal(path: str | os.PathLike) -> list[dict]:
        records = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.endswith("\n"):
                    raise StoreCorruption(f"{path}:{lineno}: truncated WAL record")
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise StoreCorruption(f"{path}:{lineno}: {exc}") from None
        return records

    # -- apply handlers --------------------------------------------------

    def _apply_init(self, payload: dict) -> None:
        if self.fragments or self.counters["wal_seq"]:
            raise StoreCorruption("init record on a non-empty store")
        self._reset(EngineParams.from_dict(payload["params"]))

    def _apply_add(self, payload: dict) -> FragmentId:
        frag = MemoryFragment.from_record(payload["fragment"])
        fid = frag.id
        if fid in self.fragments or fid in self.tombstones:
            raise StoreCorruption(f"duplicate fragment id {fid_hex(fid)}")
        self.fragments[fid] = frag
        self._table.add(fid, frag.embedding, frag.state is FragmentState.ACTIVE)
        self.counters["next_counter"] = (fid & ((1 << 64) - 1)) + 1
        self.counters["last_id_ms"] = fid >> 64
        return fid

    def _apply_connect(self, payload: dict) -> Edge:
        src, dst = parse_fid(payload["from"]), parse_fid(payload["to"])
        kind = EdgeKind(payload["kind"])
        key = (src, dst, kind)
        edge = self.edges.get(key)
        if edge is None:
            edge = Edge(src, dst, kind, payload["weight"], payload["ts"], payload["ts"])
            self.edges[key] = edge
            self._adj[src].add(key)
            self._adj[dst].add(key)
        elif payload["weight"] > edge.weight:
            edge.weight = payload["weight"]
            edge.last_reinforced_at = payload["ts"]
        return edge

    def _apply_bump_edge(self, payload: dict) -> float:
        key = (parse_fid(payload["from"]), parse_fid(payload["to"]), EdgeKind(payload["kind"]))
        edge = self.edges[key]
        old = edge.weight
        edge.weight = min(1.0, old + payload["delta"])
        edge.last_reinforced_at = payload["ts"]
        if payload.get("replay"):
            edge.last_replayed_at = payload["ts"]
        return edge.weight - old

    def _apply_update(self, payload: dict) -> dict:
        fid = parse_fid(payload["id"])
        frag = self.fragments[fid]
        cause = MutationCause(payload["cause"])
        deltas = {}
        for name in sorted(payload["set"]):
            value = payload["set"][name]
            if name == "state":
                old = frag.state
                frag.state = FragmentState(value)
                delta: float | str = f"{old.value}->{frag.state.value}"
                self._table.set_active(fid, frag.state is FragmentState.ACTIVE)
            else:
                old = getattr(frag, name)
                setattr(frag, name, value)
                delta = value - old
            deltas[name] = delta
            if name in _LOGGED_FIELDS:
                self.mutation_log.append(MutationLogEntry(payload["ts"], fid, name, delta, cause))
        if payload.get("merged_text") is not None:
            frag.provenance.merged.append(payload["merged_text"])
        return deltas

    def _apply_evict(self, payload: dict) -> dict:
        fid = parse_fid(payload["id"])
        frag = self.fragments.pop(fid)
        self._table.remove(fid)
        for key in list(self._adj.pop(fid, ())):
            edge = self.edges.pop(key)
            other = edge.other(fid)
            if other != fid:
                self._adj[other].discard(key)
        tomb = {
            "id": fid_hex(fid),
            "reason": payload["reason"],
            "ts": payload["ts"],
            "content": frag.content,
            "kind": frag.kind.value,
            "provenance": frag.to_record()["provenance"],
        }
        self.tombstones[fid] = tomb
        self.mutation_log.append(
            MutationLogEntry(payload["ts"], fid, "state", f"{frag.state.value}->evicted", MutationCause.EVICTION)
        )
        return tomb

    def _apply_meta(self, payload: dict) -> None:
        self.meta[payload["key"]] = payload["value"]

    # -- public mutations --------------------------------------------------

    def next_id(self, ts: float) -> FragmentId:
        """Creation-ordered 128-bit id: millisecond clock (clamped monotone)
        in the high 64 bits, global counter in the low 64."""
        ms = max(int(math.floor(ts * 1000)), self.counters["last_id_ms"], 0)
        return (ms << 64) | self.counters["next_counter"]

    def add_fragment(self, frag: MemoryFragment) -> FragmentId:
        if frag.id is not None:
            raise InvariantError("fragment id is assigned by the store")
        frag.validate(self.params.dim)
        for parent in frag.provenance.lineage:
            if parent not in self.fragments:
                raise InvariantError(f"lineage references unknown fragment {fid_hex(parent)}")
        frag.embedding = np.asarray(frag.embedding, dtype=np.float64)
        frag.id = self.next_id(frag.created_at)
        rec = frag.to_record()
        frag.id = None
        fid = self._commit("add", {"fragment": rec})
        frag.id = fid
        return fid

    def connect(self, src: FragmentId, dst: FragmentId, kind: EdgeKind | str,
                weight: float, ts: float | None = None) -> Edge:
        kind = EdgeKind(kind)
        a, b = self.get(src), self.get(dst)
        if src == dst:
            raise InvariantError("self-loops are not allowed")
        if not (isinstance(weight, (int, float)) and 0.0 <= weight <= 1.0):
            raise InvariantError(f"edge weight {weight!r} outside [0, 1]")
        if kind is EdgeKind.TEMPORAL and a.created_at > b.created_at:
            raise InvariantError("temporal edges must run from the earlier fragment to the later one")
        if ts is None:
            ts = max(a.created_at, b.created_at)
        return self._commit("connect", {
            "from": fid_hex(src), "to": fid_hex(dst), "kind": kind.value,
            "weight": float(weight), "ts": float(ts),
        })

    def bump_edge(self, edge: Edge, delta: float, ts: float, replay: bool = False) -> float:
        """Raise an existing edge's weight by ``delta`` (capped at 1)."""
        payload = {
            "from": fid_hex(edge.source), "to": fid_hex(edge.target), "kind": edge.kind.value,
            "delta": float(delta), "ts": float(ts),
        }
        if replay:
            payload["replay"] = True
        return self._commit("bump_edge", payload)

    def update(self, fid: FragmentId, cause: MutationCause, ts: float,
               merged_text: str | None = None, **changes) -> dict:
        """Set fragment fields; salience/reinforcement/state changes are logged."""
        frag = self.get(fid)
        bad = set(changes) - _UPDATABLE
        if bad:
            raise InvariantError(f"cannot update {sorted(bad)}")
        clean: dict[str, Any] = {}
        for name, value in changes.items():
            if name == "state":
                clean[name] = FragmentState(value).value
            else:
                clean[name] = float(value)
        if "salience" in clean and not 0.0 <= clean["salience"] <= 1.0:
            raise InvariantError("salience outside [0, 1]")
        if "reinforcement" in clean and clean["reinforcement"] < 0.0:
            raise InvariantError("reinforcement is negative")
        if "last_accessed_at" in clean and clean["last_accessed_at"] < frag.created_at:
            raise InvariantError("last_accessed_at precedes created_at")
        payload = {"id": fid_hex(fid), "cause": MutationCause(cause).value, "ts": float(ts), "set": clean}
        if merged_text is not None:
            payload["merged_text"] = merged_text
        return self._commit("update", payload)

    def evict(self, fid: FragmentId, ts: float, reason: str = "capacity") -> dict:
        """Remove a fragment from retrieval, detach its edges, keep a tombstone."""
        self.get(fid)
        return self._commit("evict", {"id": fid_hex(fid), "ts": float(ts), "reason": reason})

    def set_meta(self, key: str, value: Any) -> None:
        if self.meta.get(key) != value:
            self._commit("meta", {"key": key, "value": value})

    # -- queries -----------------------------------------------------------

    def edge(self, src: FragmentId, dst: FragmentId, kind: EdgeKind | str) -> Edge | None:
        return self.edges.get((src, dst, EdgeKind(kind)))

    def incident(self, fid: FragmentId) -> list[Edge]:
        return [self.edges[k] for k in self._adj.get(fid, ())]

    def neighbors(self, fid: FragmentId, kinds: Iterable[EdgeKind | str] | None = None,
                  min_weight: float = 0.0) -> list[tuple[FragmentId, Edge]]:
        """Outgoing and incoming edges passing the filter, heaviest first,
        ties by neighbour id then edge kind."""
        self.get(fid)
        allowed = ALL_EDGE_KINDS if kinds is None else {EdgeKind(k) for k in kinds}
        out = [
            (edge.other(fid), edge)
            for edge in self.incident(fid)
            if edge.kind in allowed and edge.weight >= min_weight
        ]
        out.sort(key=lambda pair: (-pair[1].weight, pair[0], pair[1].kind.value))
        return out

    def similarities(self, vec: np.ndarray, include_dormant: bool = False) -> tuple[list[FragmentId], np.ndarray]:
        """Cosine of ``vec`` against every stored fragment (active only by
        default), in id order."""
        return self._table.similarities(vec, include_dormant)

    def search(self, vec: np.ndarray, k: int, include_dormant: bool = False) -> list[tuple[FragmentId, float]]:
        if k < 0:
            raise ValueError("k must be >= 0")
        ids, sims = self.similarities(vec, include_dormant)
        if not ids or k == 0:
            return []
        # rows are in id order, so a stable sort breaks ties by ascending id
        order = np.argsort(-sims, kind="stable")[:k]
        return [(ids[i], float(sims[i])) for i in order]

    def lineage_sources(self) -> set[FragmentId]:
        """Ids referenced as lineage by any stored fragment."""
        out: set[FragmentId] = set()
        for frag in self.fragments.values():
            out.update(frag.provenance.lineage)
        return out

    def audit(self) -> list[str]:
        """Full-scan consistency check; returns a list of problems."""
        problems = []
        for key, edge in self.edges.items():
            if edge.source not in self.fragments or edge.target not in self.fragments:
                problems.append(f"dangling edge {fid_hex(edge.source)}->{fid_hex(edge.target)} {edge.kind.value}")
            if key != edge.key:
                problems.append(f"edge key mismatch {key}")
            if not 0.0 <= edge.weight <= 1.0:
                problems.append(f"edge weight {edge.weight} outside [0, 1]")
            if edge.kind is EdgeKind.TEMPORAL and edge.source in self.fragments and edge.target in self.fragments:
                if self.fragments[edge.source].created_at > self.fragments[edge.target].created_at:
                    problems.append(f"temporal edge runs backwards {fid_hex(edge.source)}")
        for fid, keys in self._adj.items():
            for key in keys:
                if key not in self.edges:
                    problems.append(f"adjacency of {fid_hex(fid)} lists missing edge")
        for frag in self.fragments.values():
            try:
                frag.validate(self.params.dim)
            except InvariantError as exc:
                problems.append(f"{fid_hex(frag.id)}: {exc}")
        return problems

    # -- snapshots ---------------------------------------------------------

    def to_document(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "params": self.params.to_dict(),
            "counters": dict(self.counters),
            "meta": self.meta,
            "fragments": [self.fragments[k].to_record() for k in sorted(self.fragments)],
            "edges": [self.edges[k].to_record() for k in sorted(self.edges, key=lambda k: (k[0], k[1], k[2].value))],
            "tombstones": [self.tombstones[k] for k in sorted(self.tombstones)],
            "mutation_log": [e.to_record() for e in self.mutation_log],
        }

    def dumps(self) -> bytes:
        doc = self.to_document()
        body = canonical_json(doc)
        doc["checksum"] = f"{zlib.crc32(body.encode('utf-8')):08x}"
        return (canonical_json(doc) + "\n").encode("utf-8")

    def snapshot(self, path: str | os.PathLike) -> int:
        data = self.dumps()
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
        return len(data)

    def _load_document(self, doc: dict) -> None:
        params = EngineParams.from_dict(doc["params"])
        fragments = [MemoryFragment.from_record(r) for r in doc["fragments"]]
        edges = [Edge.from_record(r) for r in doc["edges"]]
        log = [MutationLogEntry.from_record(r) for r in doc["mutation_log"]]
        self._reset(params)
        for frag in fragments:
            self.fragments[frag.id] = frag
            self._table.add(frag.id, frag.embedding, frag.state is FragmentState.ACTIVE)
        for edge in edges:
            if edge.source not in self.fragments or edge.target not in self.fragments:
                raise StoreCorruption("snapshot contains a dangling edge")
            self.edges[edge.key] = edge
            self._adj[edge.source].add(edge.key)
            self._adj[edge.target].add(edge.key)
        self.tombstones = {parse_fid(t["id"]): t for t in doc["tombstones"]}
        self.mutation_log = log
        self.meta = doc["meta"]
        self.counters = {k: int(doc["counters"][k]) for k in ("next_counter", "last_id_ms", "wal_seq")}

    @staticmethod
    def parse_snapshot(data: bytes) -> dict:
        try:
            doc = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise StoreCorruption(f"unreadable snapshot: {exc}") from None
        if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
            raise StoreCorruption("snapshot schema_version missing or unsupported")
        checksum = doc.pop("checksum", None)
        body = canonical_json(doc)
        if checksum != f"{zlib.crc32(body.encode('utf-8')):08x}":
            raise StoreCorruption("snapshot checksum mismatch")
        return doc

    def loads(self, data: bytes) -> int:
        doc = self.parse_snapshot(data)
        staged = MemoryStore._blank()
        try:
            staged._load_document(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise StoreCorruption(f"invalid snapshot content: {exc}") from None
        fh = self._wal_fh
        self.__dict__.update(staged.__dict__)
        self._wal_fh = fh
        return len(self.fragments)

    def restore(self, path: str | os.PathLike) -> int:
        """Replace this store's state with a snapshot; on any error the
        current state is left untouched."""
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise StoreCorruption(f"cannot read snapshot: {exc}") from None
        return self.loads(data)

    @classmethod
    def open(cls, directory: str | os.PathLike, params: EngineParams | None = None) -> "MemoryStore":
        """Open (or create) a store directory holding ``snapshot.json`` and
        ``wal.jsonl``: load the snapshot, then replay newer WAL records."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        snap, wal = directory / "snapshot.json", directory / "wal.jsonl"
        store = cls._blank()
        if snap.exists():
            store.restore(snap)
        records = cls.read_wal(wal) if wal.exists() else []
        tail = [r for r in records if r.get("seq", 0) > store.version]
        if not snap.exists() and not records:
            store = cls(params, wal_path=wal)
            return store
        store.replay(tail)
        store.attach_wal(wal)
        return store

    def save(self, directory: str | os.PathLike) -> int:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        return self.snapshot(directory / "snapshot.json")
