import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmamem import (
    EdgeKind,
    EngineParams,
    FragmentState,
    MemoryFragment,
    MemoryStore,
    MutationCause,
    StoreCorruption,
)
from cmamem.store import FragmentNotFound, InvariantError, fid_hex, parse_fid

from conftest import random_store, unit

P = EngineParams(dim=8)


def frag(rng, text="x", ts=0.0, **kw):
    return MemoryFragment(content=text, embedding=unit(rng, 8), created_at=ts, **kw)


def mutate_randomly(store: MemoryStore, rng: np.random.Generator, steps: int) -> None:
    """A random mix of every mutating operation."""
    ids = list(store.fragments)
    t = float(store.meta.get("clock", 1000.0))
    for _ in range(steps):
        t += float(rng.uniform(0, 50))
        op = rng.integers(5)
        if op == 0 or len(ids) < 3:
            ids.append(store.add_fragment(frag(rng, f"f{len(ids)}", t, salience=float(rng.uniform()))))
        elif op == 1:
            a, b = rng.choice(len(ids), 2, replace=False)
            a, b = sorted((ids[a], ids[b]))
            if a in store and b in store and store.edge(a, b, EdgeKind.SEMANTIC) is None:
                store.connect(a, b, EdgeKind.SEMANTIC, float(rng.uniform()), t)
        elif op == 2:
            fid = ids[rng.integers(len(ids))]
            if fid in store:
                store.update(fid, MutationCause.RETRIEVAL_REINFORCE, t,
                             reinforcement=store.get(fid).reinforcement + 0.5, last_accessed_at=t)
        elif op == 3:
            fid = ids[rng.integers(len(ids))]
            if fid in store:
                state = FragmentState.DORMANT if rng.random() < 0.5 else FragmentState.ACTIVE
                store.update(fid, MutationCause.DECAY, t, state=state)
        else:
            fid = ids[rng.integers(len(ids))]
            if fid in store and rng.random() < 0.3:
                store.evict(fid, t)
        store.set_meta("clock", t)


def test_ids_are_creation_ordered(rng):
    s = MemoryStore(P)
    a = s.add_fragment(frag(rng, ts=5.0))
    b = s.add_fragment(frag(rng, ts=5.0))
    c = s.add_fragment(frag(rng, ts=1.0))  # clock went backwards; ids still increase
    assert a < b < c
    assert parse_fid(fid_hex(c)) == c
    assert len(fid_hex(c)) == 32


def test_invariants_are_enforced(rng):
    s = MemoryStore(P)
    a = s.add_fragment(frag(rng, ts=1.0))
    b = s.add_fragment(frag(rng, ts=2.0))
    with pytest.raises(InvariantError):
        s.connect(a, a, EdgeKind.SEMANTIC, 0.5)
    with pytest.raises(InvariantError):
        s.connect(a, b, EdgeKind.SEMANTIC, 1.5)
    with pytest.raises(InvariantError):
        s.connect(b, a, EdgeKind.TEMPORAL, 0.5)
    with pytest.raises(InvariantError):
        s.update(a, MutationCause.DECAY, 3.0, salience=2.0)
    with pytest.raises(InvariantError):
        s.update(a, MutationCause.DECAY, 3.0, content="no")
    with pytest.raises(InvariantError):
        s.add_fragment(MemoryFragment("bad", np.ones(3), 0.0))
    assert s.audit() == []


def test_mutation_log_records_deltas(rng):
    s = MemoryStore(P)
    a = s.add_fragment(frag(rng))
    s.update(a, MutationCause.RETRIEVAL_REINFORCE, 1.0, reinforcement=0.5)
    s.update(a, MutationCause.SUPPRESSION, 2.0, reinforcement=0.25)
    s.update(a, MutationCause.DECAY, 3.0, state="dormant")
    log = [(e.field, e.delta, e.cause) for e in s.mutation_log]
    assert log == [
        ("reinforcement", 0.5, MutationCause.RETRIEVAL_REINFORCE),
        ("reinforcement", -0.25, MutationCause.SUPPRESSION),
        ("state", "active->dormant", MutationCause.DECAY),
    ]


def test_evict_detaches_edges_and_leaves_tombstone(rng):
    s = MemoryStore(P)
    a = s.add_fragment(frag(rng, ts=1.0))
    b = s.add_fragment(frag(rng, ts=2.0))
    s.connect(a, b, EdgeKind.TEMPORAL, 0.5)
    s.evict(a, 3.0)
    assert a not in s and not s.edges
    with pytest.raises(FragmentNotFound) as info:
        s.get(a)
    assert info.value.tombstone["reason"] == "capacity"
    assert s.audit() == []


def test_neighbors_order(rng):
    s = MemoryStore(P)
    a, b, c = (s.add_fragment(frag(rng, ts=float(i))) for i in range(3))
    s.connect(a, b, EdgeKind.SEMANTIC, 0.4)
    s.connect(c, a, EdgeKind.ASSOCIATIVE, 0.9)
    s.connect(a, b, EdgeKind.ASSOCIATIVE, 0.4)
    got = [(n, e.kind) for n, e in s.neighbors(a)]
    assert got == [(c, EdgeKind.ASSOCIATIVE), (b, EdgeKind.ASSOCIATIVE), (b, EdgeKind.SEMANTIC)]
    assert [n for n, _ in s.neighbors(a, kinds=["semantic"])] == [b]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 120))
def test_wal_replay_and_snapshot_round_trip(seed, steps):
    rng = np.random.default_rng(seed)
    s = MemoryStore(P)
    mutate_randomly(s, rng, steps)
    assert MemoryStore.from_wal(s.wal).dumps() == s.dumps()
    restored = MemoryStore._blank()
    restored.loads(s.dumps())
    assert restored.dumps() == s.dumps()
    assert restored.audit() == []


def test_open_replays_wal_after_snapshot(tmp_path, rng):
    s = MemoryStore.open(tmp_path, P)
    mutate_randomly(s, rng, 40)
    s.save(tmp_path)
    mutate_randomly(s, rng, 40)  # only in the WAL
    s.close()
    again = MemoryStore.open(tmp_path)
    assert again.dumps() == s.dumps()
    again.close()


def test_open_from_wal_alone(tmp_path, rng):
    s = MemoryStore.open(tmp_path, P)
    mutate_randomly(s, rng, 30)
    s.close()
    assert MemoryStore.open(tmp_path).dumps() == s.dumps()


def test_tampered_wal_is_detected(tmp_path, rng):
    s = MemoryStore.open(tmp_path, P)
    mutate_randomly(s, rng, 10)
    s.close()
    wal = tmp_path / "wal.jsonl"
    lines = wal.read_text().splitlines()
    rec = json.loads(lines[3])
    rec["payload"]["ts"] = rec["payload"].get("ts", 0) + 1
    lines[3] = json.dumps(rec)
    wal.write_text("\n".join(lines) + "\n")
    with pytest.raises(StoreCorruption, match="checksum"):
        MemoryStore.open(tmp_path)


def test_truncated_wal_is_detected(tmp_path, rng):
    s = MemoryStore.open(tmp_path, P)
    mutate_randomly(s, rng, 5)
    s.close()
    wal = tmp_path / "wal.jsonl"
    wal.write_text(wal.read_text()[:-10])
    with pytest.raises(StoreCorruption):
        MemoryStore.open(tmp_path)


def test_failed_restore_leaves_state_untouched(tmp_path, rng):
    s = random_store(rng, 10, 15, dim=8, params=P)
    before = s.dumps()
    bad = tmp_path / "bad.json"
    bad.write_bytes(before.replace(b'"edges"', b'"edgez"'))
    with pytest.raises(StoreCorruption):
        s.restore(bad)
    assert s.dumps() == before
    with pytest.raises(StoreCorruption):
        s.restore(tmp_path / "missing.json")


def test_dumps_is_canonical(rng):
    a = random_store(np.random.default_rng(3), 6, 8, dim=8, params=P)
    b = random_store(np.random.default_rng(3), 6, 8, dim=8, params=P)
    assert a.dumps() == b.dumps()
    doc = json.loads(a.dumps())
    assert doc["schema_version"] == 1 and len(doc["checksum"]) == 8
