"""Small hand-checked scenarios for each component, one behaviour per test."""
import io
import json
import math

import numpy as np
import pytest

from cmamem import (EdgeKind, EngineParams, FragmentKind, FragmentState, HashingEmbedder, MemoryEngine,
                    MemoryFragment, MemoryStore, RagBaseline, TemporalClass, cosine)
from cmamem.activation import activate, seed_vector, spread
from cmamem.cli import main
from cmamem.consolidation import decay_and_dormancy, replay
from cmamem.embedding import top_k
from cmamem.evaluation.judge import RubricJudge
from cmamem.evaluation.stats import cohens_d, mcnemar, permutation_test
from cmamem.ingest import (classify_temporal, detect_novelty, enforce_capacity, retention, score_salience,
                           segment_episode)
from cmamem.retrieval import combine, score
from cmamem.store import InvariantError, Provenance

DAY = 86400.0
WEEK = 7 * DAY
EMB = HashingEmbedder()
SOURDOUGH = ["Sourdough bread needs a ripe starter culture.",
             "A ripe sourdough starter culture makes good bread.",
             "Feed the sourdough starter culture before baking bread.",
             "Sourdough bread rises slowly with a starter culture."]


def onehot(i, dim=32):
    v = np.zeros(dim)
    v[i] = 1.0
    return v


def frag(text="note", i=0, dim=32, **kw):
    kw.setdefault("created_at", 0.0)
    return MemoryFragment(content=text, embedding=onehot(i, dim), **kw)


def small_store(n, dim=32, **params):
    store = MemoryStore(EngineParams(dim=dim, **params))
    return store, [store.add_fragment(frag(f"n{i}", i, dim)) for i in range(n)]


# -- store -----------------------------------------------------------------

def test_repeat_connect_keeps_heavier_weight():
    store, (a, b) = small_store(2)
    store.connect(a, b, EdgeKind.SEMANTIC, 0.7)
    store.connect(a, b, EdgeKind.SEMANTIC, 0.4)
    assert store.edge(a, b, EdgeKind.SEMANTIC).weight == 0.7
    assert len(store.edges) == 1


def test_zero_embedding_rejected():
    store = MemoryStore(EngineParams(dim=4))
    with pytest.raises(InvariantError):
        store.add_fragment(MemoryFragment(content="x", embedding=np.zeros(4), created_at=0.0))
    assert len(store) == 0


def test_neighbors_min_weight_filter():
    store, (a, b, c) = small_store(3)
    store.connect(a, b, EdgeKind.SEMANTIC, 0.9)
    store.connect(a, c, EdgeKind.SEMANTIC, 0.2)
    assert [(n, e.weight) for n, e in store.neighbors(a, min_weight=0.5)] == [(b, 0.9)]


def test_empty_store_round_trips(tmp_path):
    store = MemoryStore()
    store.save(tmp_path / "s")
    again = MemoryStore.open(tmp_path / "s")
    assert len(again) == 0 and not again.edges
    assert again.dumps() == store.dumps()


def test_evicted_fragment_is_never_retrieved():
    eng = MemoryEngine()
    texts = ["Kafka streams the click events.", "Redis caches session tokens.",
             "Postgres stores the orders.", "Kafka retention is seven days."]
    ids = [eng.ingest(t, "s", i * 60.0).fragment_id for i, t in enumerate(texts)]
    active = eng.store.count(FragmentState.ACTIVE)
    eng.store.evict(ids[0], 500.0, reason="manual")
    assert eng.store.count(FragmentState.ACTIVE) == active - 1
    for text in texts + ["kafka", "click events"]:
        out = eng.retrieve(text, k=5, now=1000.0)
        assert ids[0] not in [r.fragment_id for r in out.candidates]


# -- embedding -------------------------------------------------------------

def test_shared_sense_words_pull_closer():
    snake = EMB.embed("python snake zoo")
    assert cosine(snake, EMB.embed("python code compiler")) < cosine(snake, EMB.embed("zoo snake enclosure"))


def test_cosine_extremes():
    v = EMB.embed("harbor seawall")
    assert cosine(v, -v) == pytest.approx(-1.0)
    assert cosine(onehot(0), onehot(1)) == 0.0


def test_top_k_sorted_and_capped():
    q = np.array([1.0, 0.0])
    angles = [0.3, 1.2, 0.0, 2.5, 0.7]
    matrix = np.array([[math.cos(a), math.sin(a)] for a in angles])
    got = top_k(q, 10, [10, 11, 12, 13, 14], matrix)
    assert [i for i, _ in got] == [12, 10, 14, 11, 13]
    assert [s for _, s in got] == pytest.approx(sorted((math.cos(a) for a in angles), reverse=True))


# -- ingest ----------------------------------------------------------------

def test_salience_examples():
    assert score_salience("The meeting is at 10.") == pytest.approx(0.3)
    assert score_salience("URGENT!!! Production is down!") >= 0.5


@pytest.mark.parametrize("text,expected", [
    ("I run every Tuesday.", TemporalClass.HABITUAL),
    ("Water boils at 100C.", TemporalClass.TIMELESS),
    ("Saw a deer on the trail this morning.", TemporalClass.EPISODIC),
])
def test_temporal_examples(text, expected):
    assert classify_temporal(text, True) is expected


def test_novelty_examples():
    store = MemoryStore()
    base = EMB.embed("Priya leads the Atlas search project.")
    assert detect_novelty(base, store) is None
    fid = store.add_fragment(MemoryFragment(content="Priya leads the Atlas search project.",
                                            embedding=base, created_at=0.0))
    assert detect_novelty(EMB.embed("Priya leads the Atlas search project."), store) == fid
    near = EMB.embed("Priya leads the Atlas search project in Berlin since March.")
    assert cosine(near, base) < 0.92
    assert detect_novelty(near, store) is None


@pytest.mark.parametrize("gap,boundary", [(10.0, False), (7200.0, True), (1800.0, False)])
def test_episode_gap_examples(gap, boundary):
    assert segment_episode(1000.0, 1000.0 + gap, False) is boundary


def test_oversize_text_keeps_first_and_last_sentence():
    eng = MemoryEngine(EngineParams(size_threshold=100))
    first = "The quarterly review opened with a long recap of every incident."
    middle = "Then the team spent an hour arguing about dashboards and alert thresholds."
    last = "Finally the pager rotation moved to a weekly schedule."
    out = eng.ingest(f"{first} {middle} {last}", "s", 0.0)
    stored = eng.store.get(out.fragment_id)
    assert stored.kind is FragmentKind.SUMMARY
    assert first in stored.content and last in stored.content
    assert out.edges_created == 0


def test_capacity_evicts_lowest_retention():
    store = MemoryStore(EngineParams(dim=32, capacity=2))
    # retention = 0.4 salience + 0.4 reinf/5 + 0.2 at age zero
    targets = {0.9: (1.0, 3.75), 0.5: (0.75, 0.0), 0.3: (0.25, 0.0)}
    ids = {}
    for i, (r, (sal, reinf)) in enumerate(targets.items()):
        ids[r] = store.add_fragment(frag(f"r{r}", i, salience=sal, reinforcement=reinf))
        assert retention(store.get(ids[r]), 0.0, store.params.decay_rate) == pytest.approx(r)
    assert enforce_capacity(store, 0.0) == [ids[0.3]]
    assert set(store.fragments) == {ids[0.9], ids[0.5]}


def test_gist_is_never_evicted():
    store = MemoryStore(EngineParams(dim=32, capacity=2))
    a = store.add_fragment(frag("a", 0, salience=1.0, reinforcement=5.0))
    b = store.add_fragment(frag("b", 1, salience=1.0, reinforcement=5.0))
    g = store.add_fragment(frag("g", 2, salience=0.0, kind=FragmentKind.GIST, provenance=Provenance(lineage=[a])))
    assert enforce_capacity(store, 0.0) == [b]
    assert g in store


# -- activation ------------------------------------------------------------

def chain_store():
    store, (a, b, c) = small_store(3)
    store.connect(a, b, EdgeKind.SEMANTIC, 1.0)
    store.connect(b, c, EdgeKind.SEMANTIC, 1.0)
    return store, (a, b, c)


@pytest.mark.parametrize("hops", [1, 2])
def test_chain_decays_by_damping(hops):
    store, (a, b, c) = chain_store()
    fld = spread(store, seed_vector(store, onehot(0), 1), EngineParams(dim=32, max_hops=hops))
    assert fld.level(b) == pytest.approx(0.5)
    assert fld.level(c) == pytest.approx(0.25 if hops == 2 else 0.0)


def test_fan_out_limits_star():
    store, ids = small_store(21)
    center, leaves = ids[0], ids[1:]
    for i, leaf in enumerate(leaves):
        store.connect(center, leaf, EdgeKind.SEMANTIC, 0.05 * (i + 1))
    fld = spread(store, seed_vector(store, onehot(0), 1), EngineParams(dim=32, max_hops=1))
    reached = {f for f in fld.levels if f != center}
    assert reached == set(leaves[-16:])


def test_activation_on_empty_store_and_single_seed():
    assert activate(MemoryStore(), EMB, "anything").levels == {}
    store, (a, b, c) = chain_store()
    assert list(seed_vector(store, onehot(0) + 0.5 * onehot(1), 1).levels) == [a]


def test_context_moves_top_activation():
    eng = MemoryEngine()
    snake = eng.ingest("Python the snake sheds skin in the terrarium.", "a", 0.0).fragment_id
    code = eng.ingest("Python scripts parse the server logs.", "b", 60.0).fragment_id
    top = lambda ctx: activate(eng.store, eng.embedder, "python", ctx).ranked()[0][0]
    assert top(["reptile terrarium skin shedding"]) == snake
    assert top(["server logs parse scripts"]) == code


# -- retrieval scoring -----------------------------------------------------

def test_score_weights_select_factors():
    f = MemoryFragment(content="x", embedding=EMB.embed("harbor seawall flood"), created_at=100.0)
    q = EMB.embed("harbor flood")
    only_sim = EngineParams(w_sim=1.0, w_act=0.0, w_rec=0.0, w_reinf=0.0, w_ctx=0.0)
    only_rec = EngineParams(w_sim=0.0, w_act=0.0, w_rec=1.0, w_reinf=0.0, w_ctx=0.0)
    assert score(f, q, None, None, 100.0, only_sim).score == pytest.approx(cosine(q, f.embedding))
    assert score(f, q, None, None, 100.0, only_rec).score == 1.0
    assert combine((0.8, 0.5, 1.0, 0.2, 0.0), EngineParams().weights) == pytest.approx(0.625)


def kafka_engine(**params):
    eng = MemoryEngine(EngineParams(**params))
    for i, t in enumerate(["Kafka streams the click events.", "Kafka retention is seven days.",
                           "Kafka brokers sit in rack four.", "Redis caches session tokens."]):
        eng.ingest(t, f"s{i}", i * 60.0)
    return eng


def test_zero_decay_keeps_recency_at_one():
    eng = kafka_engine(decay_rate=0.0)
    out = eng.retrieve("kafka", k=3, now=1000 * DAY)
    assert all(r.rec == 1.0 for r in out.results)


def test_single_result_makes_no_associations():
    eng = kafka_engine()
    before = len(eng.store.edges)
    receipt = eng.apply_mutation(eng.retrieve("kafka", k=1, now=1000.0))
    assert receipt.associations == [] and len(eng.store.edges) == before


def test_suppression_floors_at_zero():
    eng = kafka_engine(near_miss_ratio=0.0)
    for fid in list(eng.store.fragments):
        eng.store.update(fid, "replay", 500.0, reinforcement=0.1)
    receipt = eng.apply_mutation(eng.retrieve("kafka", k=1, now=1000.0))
    assert receipt.suppressed
    for fid, delta in receipt.suppressed:
        assert eng.store.get(fid).reinforcement == 0.0 and delta == pytest.approx(-0.1)


def test_repeated_query_raises_recency_and_reinforcement():
    eng = kafka_engine()
    first = eng.query("kafka", k=2, now=DAY)
    second = eng.query("kafka", k=2, now=DAY)
    a = {r.fragment_id: r for r in first.results}
    for r in second.results:
        if r.fragment_id in a:
            assert r.rec > a[r.fragment_id].rec and r.reinf > a[r.fragment_id].reinf


# -- consolidation ---------------------------------------------------------

def pair_engine(texts):
    eng = MemoryEngine()
    return eng, [eng.ingest(t, "s", i * 300.0).fragment_id for i, t in enumerate(texts)]


def test_replay_caps_edge_at_one():
    eng, (a, b) = pair_engine(["Boarded the ferry.", "Saw dolphins near the bow."])
    eng.store.connect(a, b, EdgeKind.TEMPORAL, 0.95)
    replay(eng.store, DAY, 1000.0)
    assert eng.store.edge(a, b, EdgeKind.TEMPORAL).weight == 1.0


def test_replay_strengthens_whole_chain():
    eng, (a, b, c) = pair_engine(["Boarded the ferry.", "Saw dolphins near the bow.", "Docked at noon."])
    res = replay(eng.store, DAY, 1000.0)
    assert len(res.edge_deltas) == 2
    assert eng.store.edge(a, b, EdgeKind.TEMPORAL).weight == pytest.approx(0.6)
    assert eng.store.edge(b, c, EdgeKind.TEMPORAL).weight == pytest.approx(0.6)
    assert replay(eng.store, DAY, 30 * DAY).edge_deltas == []


def test_dissimilar_corpus_yields_no_insights():
    eng = MemoryEngine()
    for i, t in enumerate(["Kafka streams the click events.", "Grandma's lasagna uses nutmeg.",
                           "Spring tide floods the harbor.", "Violin strings need rosin.",
                           "Car insurance renews in May."]):
        eng.ingest(t, f"s{i}", i * 4000.0)
    assert eng.consolidate(DAY, clock=None).insights == []


def test_single_cluster_gives_one_insight():
    eng = MemoryEngine()
    members = [eng.ingest(t, f"s{i}", i * 4000.0).fragment_id for i, t in enumerate(SOURDOUGH)]
    report = eng.consolidate(DAY, clock=None)
    assert len(report.insights) == 1
    ins = report.insights[0]
    derived = [e for e in eng.store.incident(ins) if e.kind is EdgeKind.DERIVED]
    assert len(derived) == 4 and {e.target for e in derived} == set(members)


def test_two_episodes_are_not_enough_for_gist():
    eng = MemoryEngine()
    t = 0.0
    for day in range(2):
        eng.ingest(f"Standup walked the sprint board, day {day}.", f"d{day}", t)
        t += DAY
    assert eng.consolidate(t, clock=None).gists == []


def test_gist_survives_capacity_pressure():
    eng = MemoryEngine(EngineParams(capacity=7))
    t = 0.0
    days = [("Morning standup covered the sprint board.", "Standup flagged two blockers on the board."),
            ("Sprint board review during the standup.", "The standup board listed three blockers."),
            ("Standup walked the sprint board columns.", "Blockers on the board slowed the standup.")]
    for day, lines in enumerate(days):
        for line in lines:
            eng.ingest(line, f"day{day}", t)
            t += 300.0
        t += DAY
    (gist,) = eng.consolidate(t, clock=None).gists
    evicted = []
    for i, line in enumerate(["Car insurance renews in May.", "Violin strings need rosin.",
                              "Grandma's lasagna uses nutmeg."]):
        evicted += eng.ingest(line, "later", t + i).evicted
    assert evicted and gist in eng.store


def test_abstracted_member_fades_first():
    store = MemoryStore(EngineParams(dim=32))
    plain = store.add_fragment(frag("plain", 0))
    member = store.add_fragment(frag("member", 1))
    store.add_fragment(frag("insight", 2, kind=FragmentKind.INSIGHT, provenance=Provenance(lineage=[member])))
    assert decay_and_dormancy(store, 0.0) == []
    first = {}
    for day in range(1, 60):
        for fid in decay_and_dormancy(store, day * DAY):
            first[fid] = day
    assert first[member] < first[plain]


def test_empty_store_consolidates_to_zero_report():
    report = MemoryEngine().consolidate(1000.0, clock=None)
    assert report.to_dict() == {"now": 1000.0, "replayed_chains": 0, "edge_deltas": [], "insights": [],
                                "gists": [], "dormant": [], "duration_ms": 0.0}


# -- baseline, judge, statistics -------------------------------------------

def test_rag_keeps_duplicates_in_order():
    rag = RagBaseline()
    assert [rag.ingest("same text", 0.0), rag.ingest("same text", 1.0)] == [1, 2]
    assert len(rag) == 2


def test_rag_half_life_and_pure_similarity():
    rag = RagBaseline()
    rag.ingest("harbor seawall flood", 0.0)
    rag.ingest("harbor seawall flood", WEEK)
    old, new = sorted(rag.retrieve("harbor flood", k=2, now=WEEK), key=lambda h: h.doc_id)
    assert old.score == pytest.approx(new.score / 2)
    flat = RagBaseline(decay_rate=0.0)
    flat.ingest("harbor seawall flood", 0.0)
    (hit,) = flat.retrieve("harbor flood", now=1e9)
    assert hit.score == pytest.approx(cosine(EMB.embed("harbor flood"), EMB.embed("harbor seawall flood")))


def test_contamination_cancels_accuracy():
    v = RubricJudge().judge("q", ["Maya drinks iced matcha", "Maya drinks flat white"], ["Maya drinks iced matcha"],
                            ["iced matcha", "cafe Lisbon"], ["flat white"])
    assert v.label.value == "B_wins"
    assert (v.score_a, v.score_b) == (0.0, 0.5)


def test_statistics_examples():
    assert cohens_d([0.5, 0.7, 0.9]) == pytest.approx(3.5)
    assert cohens_d([1.0, -1.0]) == 0.0
    assert permutation_test([1.0] * 10) == pytest.approx(2 / 1024)
    assert permutation_test([1.0] * 10, n_shuffles=10000, exact=False) == pytest.approx(2 / 1024, abs=0.003)
    assert permutation_test([0.4]) == 1.0
    assert mcnemar(5, 5) == 1.0 and mcnemar(0, 1) == 1.0


# -- command line ----------------------------------------------------------

def run(*argv):
    out = io.StringIO()
    return main([str(a) for a in argv], out=out), out.getvalue()


def write_corpus(path, texts):
    path.write_text("".join(json.dumps({"text": t, "session": "s", "ts": i * 60}) + "\n"
                            for i, t in enumerate(texts)))
    return path


def test_cli_duplicate_line_merges(tmp_path):
    corpus = write_corpus(tmp_path / "c.jsonl", ["Kafka streams events.", "Kafka streams events."])
    assert run("ingest", corpus, "--store", tmp_path / "s") == (0, "created=1 merged=1 evicted=0\n")


def test_cli_malformed_line_reports_its_number(tmp_path, capsys):
    corpus = write_corpus(tmp_path / "c.jsonl", [f"Note number {i}." for i in range(6)])
    corpus.write_text(corpus.read_text() + "{oops\n")
    code, _ = run("ingest", corpus, "--store", tmp_path / "s")
    assert code == 2 and ":7:" in capsys.readouterr().err


def test_cli_read_only_queries_repeat_exactly(tmp_path):
    corpus = write_corpus(tmp_path / "c.jsonl", ["Kafka streams events.", "Kafka keeps seven days.",
                                                 "Redis caches tokens."])
    run("ingest", corpus, "--store", tmp_path / "s")
    args = ("query", "kafka", "--store", tmp_path / "s", "--no-mutate", "--explain", "--now", 1000)
    assert run(*args) == run(*args)


def test_cli_dump_edge_count(tmp_path):
    corpus = write_corpus(tmp_path / "c.jsonl", ["Kafka streams events.", "Kafka keeps seven days.",
                                                 "Redis caches tokens."])
    run("ingest", corpus, "--store", tmp_path / "s")
    code, out = run("dump", "--store", tmp_path / "s")
    assert len(json.loads(out)["edges"]) == len(MemoryStore.open(tmp_path / "s").edges)


def test_cli_eval_table_has_row_per_study_and_total():
    code, out = run("eval", "--seeds", "0", "--no-timing")
    assert code == 0
    rows = [line.split()[0] for line in out.splitlines()[2:7]]
    assert rows == ["knowledge_update", "temporal", "associative", "disambiguation", "total"]
