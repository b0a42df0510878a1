import pytest

from cmamem import ClockRegression, EdgeKind, EngineParams, FragmentKind, FragmentState, MemoryEngine, TemporalClass
from cmamem.ingest import classify_temporal, score_salience, segment_episode


def test_salience_heuristic():
    assert score_salience("The meeting is at noon.") == pytest.approx(0.3)
    excited = score_salience("I was absolutely furious and terrified!")
    assert 0.3 < excited <= 1.0
    with pytest.raises(ValueError):
        score_salience("  ")


def test_temporal_classes():
    assert classify_temporal("Water boils at 100 degrees.", True) is TemporalClass.TIMELESS
    assert classify_temporal("Yesterday I tripped on the stairs.", True) is TemporalClass.EPISODIC
    assert classify_temporal("Yesterday I tripped on the stairs.", False) is TemporalClass.TIMELESS
    assert classify_temporal("I always jog every morning.", True) is TemporalClass.HABITUAL


def test_segment_episode():
    assert not segment_episode(0.0, 1800.0, False)
    assert segment_episode(0.0, 1800.1, False)
    assert segment_episode(0.0, 1.0, True)
    with pytest.raises(ClockRegression):
        segment_episode(10.0, 5.0, False)


def test_episode_chain_and_gap(engine):
    ids = [engine.ingest(t, "s", ts).fragment_id for t, ts in [
        ("Boarded the train to Porto.", 0.0),
        ("Bought a pastel de nata.", 300.0),
        ("Walked along the Douro river.", 900.0),
        ("Slept early at the hostel.", 9000.0),  # beyond the 30 minute gap
    ]]
    eps = [engine.store.get(f).episode_id for f in ids]
    assert eps[0] == eps[1] == eps[2] != eps[3]
    temporal = sorted((e.source, e.target) for e in engine.store.edges.values() if e.kind is EdgeKind.TEMPORAL)
    assert temporal == [(ids[0], ids[1]), (ids[1], ids[2])]
    assert all(e.weight == 0.5 for e in engine.store.edges.values() if e.kind is EdgeKind.TEMPORAL)


def test_sessions_do_not_share_episodes(engine):
    a = engine.ingest("Alpha deploy finished.", "s1", 0.0).fragment_id
    b = engine.ingest("Beta vendor invoice arrived.", "s2", 10.0).fragment_id
    assert engine.store.get(a).episode_id != engine.store.get(b).episode_id
    assert engine.store.edge(a, b, EdgeKind.TEMPORAL) is None


def test_near_duplicate_merges(engine):
    first = engine.ingest("The staging database runs Postgres fifteen.", "s", 0.0)
    again = engine.ingest("The staging database runs Postgres fifteen!", "s", 60.0)
    assert first.status == "created" and again.merged
    frag = engine.store.get(first.fragment_id)
    assert len(engine.store) == 1
    assert frag.reinforcement == pytest.approx(0.5)
    assert frag.last_accessed_at == 60.0
    assert frag.salience == pytest.approx(score_salience("The staging database runs Postgres fifteen!"))
    assert engine.store.mutation_log[-1].cause.value == "merge"


def test_semantic_edges_link_related_fragments(engine):
    a = engine.ingest("Kafka brokers replicate partitions.", "s1", 0.0).fragment_id
    b = engine.ingest("Kafka brokers replicate partitions across racks.", "s2", 10.0).fragment_id
    edge = engine.store.edge(b, a, EdgeKind.SEMANTIC)
    assert edge is not None and 0.55 <= edge.weight <= 1.0


def test_clock_regression_is_rejected(engine):
    engine.ingest("first", "s", 100.0)
    with pytest.raises(ClockRegression):
        engine.ingest("second", "other", 50.0)
    with pytest.raises(ValueError):
        engine.ingest("   ", "s", 200.0)


def test_oversize_text_is_summarised_with_archive():
    eng = MemoryEngine(EngineParams(size_threshold=80))
    long = " ".join(f"Sentence {i} covers topic {i} in some detail." for i in range(12))
    out = eng.ingest(long, "s", 0.0)
    frag = eng.store.get(out.fragment_id)
    assert frag.kind is FragmentKind.SUMMARY and len(frag.content) < len(long)
    (archive,) = frag.provenance.lineage
    assert eng.store.get(archive).content == long
    assert eng.store.get(archive).state is FragmentState.DORMANT
    assert eng.store.edge(out.fragment_id, archive, EdgeKind.DERIVED) is not None


def test_capacity_evicts_lowest_retention():
    eng = MemoryEngine(EngineParams(capacity=3))
    texts = ["Quiet note about paperclips.", "I was thrilled and amazed by the eclipse!",
             "Routine memo on staplers.", "Another memo on envelopes."]
    outs = [eng.ingest(t, f"s{i}", float(i)) for i, t in enumerate(texts)]
    assert len(eng.store) == 3
    evicted = [f for o in outs for f in o.evicted]
    assert evicted == [outs[0].fragment_id]
    assert outs[1].fragment_id in eng.store  # the salient one survives
