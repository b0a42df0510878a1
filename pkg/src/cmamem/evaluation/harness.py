"""Run probe studies against the memory engine and the RAG baseline."""

from __future__ import annotations

import csv
import io
import json
import logging
import random
import time
from dataclasses import dataclass, field
from statistics import fmean
from typing import Callable, Sequence

from ..engine import MemoryEngine
from ..params import EngineParams
from ..rag import RagBaseline
from .judge import JudgeProvider, RubricJudge, VerdictLabel
from .probes import STUDIES, ProbeQuery, generate
from .stats import cohens_d, cohens_h, mcnemar, permutation_test

logger = logging.getLogger(__name__)


@dataclass
class QueryRecord:
    qid: str
    prompt: str
    score_cma: float
    score_rag: float
    verdict: str
    accuracy_cma: float
    accuracy_rag: float
    contamination_cma: float
    contamination_rag: float
    hit_cma: float
    hit_rag: float
    seed_verdicts: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class StudyReport:
    study: str
    seeds: list[int]
    per_query: list[QueryRecord]
    counts: dict[str, int]
    d: float | None
    h: float | None
    p_perm: float | None
    p_mcnemar: float | None
    latency_ms: dict[str, float]
    metrics: dict[str, dict[str, float]]

    @property
    def n_queries(self) -> int:
        return len(self.per_query)

    @property
    def decisive(self) -> int:
        return self.counts["cma_wins"] + self.counts["rag_wins"]

    @property
    def cma_share(self) -> float:
        return self.counts["cma_wins"] / self.decisive if self.decisive else 0.0

    @property
    def latency_ratio(self) -> float | None:
        rag = self.latency_ms["rag"]
        return self.latency_ms["cma"] / rag if rag > 0 else None

    def to_dict(self) -> dict:
        return {
            "study": self.study,
            "seeds": self.seeds,
            "counts": self.counts,
            "d": self.d,
            "h": self.h,
            "p_perm": self.p_perm,
            "p_mcnemar": self.p_mcnemar,
            "latency_ms": {**self.latency_ms, "ratio": self.latency_ratio},
            "metrics": self.metrics,
            "per_query": [q.to_dict() for q in self.per_query],
        }


def _texts_cma(outcome) -> list[str]:
    return [r.content for r in outcome.results]


def _run_seed(study: str, seed: int, params: EngineParams, judge: JudgeProvider,
              clock: Callable[[], float] | None) -> dict[str, dict]:
    scenarios = generate(study, seed)
    cma = MemoryEngine(params)
    rag = RagBaseline(cma.embedder, decay_rate=params.decay_rate)
    if rag.fingerprint != cma.embedder.fingerprint:
        raise RuntimeError("systems must share one embedding provider")
    records = sorted((r for s in scenarios for r in s.setup), key=lambda r: (r.ts, r.session))
    for rec in records:
        cma.ingest(rec.text, rec.session, rec.ts)
        rag.ingest(rec.text, rec.ts)
    queries: list[ProbeQuery] = [q for s in scenarios for q in s.queries]
    now = max(q.now for q in queries)
    cma.consolidate(now, clock=None)

    rng = random.Random(f"run:{study}:{seed}")
    order = list(range(len(queries)))
    rng.shuffle(order)
    out = {}
    for i in order:
        q = queries[i]
        t0 = clock() if clock else 0.0
        outcome = cma.query(q.prompt, q.k, q.context, q.now, mutate=True)
        t1 = clock() if clock else 0.0
        hits = rag.retrieve(q.prompt, q.k, q.now)
        t2 = clock() if clock else 0.0
        cma_texts, rag_texts = _texts_cma(outcome), [h.text for h in hits]
        cma_is_a = rng.random() < 0.5
        a, b = (cma_texts, rag_texts) if cma_is_a else (rag_texts, cma_texts)
        v = judge.judge(q.prompt, a, b, q.expected, q.forbidden, q.rubric)
        side_cma, side_rag = (v.side_a, v.side_b) if cma_is_a else (v.side_b, v.side_a)
        label = v.label
        if label is VerdictLabel.A_WINS:
            label = "cma_wins" if cma_is_a else "rag_wins"
        elif label is VerdictLabel.B_WINS:
            label = "rag_wins" if cma_is_a else "cma_wins"
        else:
            label = label.value
        out[q.qid] = {
            "query": q,
            "cma": side_cma,
            "rag": side_rag,
            "verdict": label,
            "latency": ((t1 - t0) * 1000.0, (t2 - t1) * 1000.0),
        }
    return out


def run_study(study: str, seeds: Sequence[int] = (0, 1, 2), params: EngineParams | None = None,
              judge: RubricJudge | None = None, clock: Callable[[], float] | None = time.perf_counter,
              n_shuffles: int = 10000) -> StudyReport:
    """Run one study for every seed and aggregate per-query mean scores.

    A query's verdict is the judge's label for its seed-mean scores. Pass
    ``clock=None`` to zero the latency fields and get byte-identical reports.
    """
    if study not in STUDIES:
        raise ValueError(f"unknown study {study!r}")
    if not seeds:
        raise ValueError("need at least one seed")
    params = params or EngineParams()
    params.validate()
    judge = judge or RubricJudge()
    runs = [_run_seed(study, s, params, judge, clock) for s in seeds]
    qids = sorted(runs[0])

    per_query = []
    lat_cma, lat_rag = [], []
    for qid in qids:
        rows = [run[qid] for run in runs]
        s_cma = fmean(r["cma"].score for r in rows)
        s_rag = fmean(r["rag"].score for r in rows)
        label = judge.label(s_cma, s_rag)
        verdict = {VerdictLabel.A_WINS: "cma_wins", VerdictLabel.B_WINS: "rag_wins"}.get(label, label.value)
        per_query.append(QueryRecord(
            qid=qid,
            prompt=rows[0]["query"].prompt,
            score_cma=s_cma,
            score_rag=s_rag,
            verdict=verdict,
            accuracy_cma=fmean(r["cma"].accuracy for r in rows),
            accuracy_rag=fmean(r["rag"].accuracy for r in rows),
            contamination_cma=fmean(r["cma"].contamination for r in rows),
            contamination_rag=fmean(r["rag"].contamination for r in rows),
            hit_cma=fmean(float(r["cma"].accuracy > 0) for r in rows),
            hit_rag=fmean(float(r["rag"].accuracy > 0) for r in rows),
            seed_verdicts=[r["verdict"] for r in rows],
        ))
        for r in rows:
            lat_cma.append(r["latency"][0])
            lat_rag.append(r["latency"][1])

    counts = {key: sum(q.verdict == key for q in per_query)
              for key in ("cma_wins", "rag_wins", "tie", "both_wrong")}
    decisive = counts["cma_wins"] + counts["rag_wins"]
    diffs = [q.score_cma - q.score_rag for q in per_query]
    metrics = {
        name: {
            "accuracy": fmean(getattr(q, f"accuracy_{name}") for q in per_query),
            "contamination": fmean(getattr(q, f"contamination_{name}") for q in per_query),
            "hit_rate": fmean(getattr(q, f"hit_{name}") for q in per_query),
            "mean_score": fmean(getattr(q, f"score_{name}") for q in per_query),
        }
        for name in ("cma", "rag")
    }
    report = StudyReport(
        study=study,
        seeds=list(seeds),
        per_query=per_query,
        counts=counts,
        d=cohens_d(diffs),
        h=cohens_h(counts["cma_wins"] / decisive, counts["rag_wins"] / decisive) if decisive else None,
        p_perm=permutation_test(diffs, n_shuffles=n_shuffles, seed=0),
        p_mcnemar=mcnemar(counts["cma_wins"], counts["rag_wins"]) if decisive else None,
        latency_ms={"cma": fmean(lat_cma), "rag": fmean(lat_rag)},
        metrics=metrics,
    )
    logger.info("%s: %s", study, counts)
    return report


@dataclass(frozen=True)
class CriterionResult:
    key: str
    description: str
    passed: bool
    observed: str


def check_criteria(report: StudyReport) -> list[CriterionResult]:
    """Behavioral thresholds for one study."""
    c, m = report.counts, report.metrics
    if report.study == "knowledge_update":
        return [CriterionResult(
            "4a", "knowledge updates: CMA wins >= 34/40 and RAG wins <= 4",
            c["cma_wins"] >= 34 and c["rag_wins"] <= 4,
            f"cma_wins={c['cma_wins']} rag_wins={c['rag_wins']}",
        )]
    if report.study == "temporal":
        return [CriterionResult(
            "4b", "temporal association: CMA share of decisive trials >= 0.8",
            report.decisive > 0 and report.cma_share >= 0.8,
            f"cma_wins={c['cma_wins']} decisive={report.decisive} share={report.cma_share:.3f}",
        )]
    if report.study == "associative":
        return [CriterionResult(
            "4c", "associative recall: CMA hit rate >= 0.6 and RAG hit rate <= 0.3",
            m["cma"]["hit_rate"] >= 0.6 and m["rag"]["hit_rate"] <= 0.3,
            f"cma_hit={m['cma']['hit_rate']:.3f} rag_hit={m['rag']['hit_rate']:.3f}",
        )]
    return [CriterionResult(
        "4d", "disambiguation: CMA contamination <= 0.1 and decisive share >= 0.8",
        m["cma"]["contamination"] <= 0.1 and report.decisive > 0 and report.cma_share >= 0.8,
        f"cma_contamination={m['cma']['contamination']:.3f} share={report.cma_share:.3f}",
    )]


def _effect(report: StudyReport) -> str:
    if report.study == "knowledge_update":
        return "d = n/a" if report.d is None else f"d = {report.d:.2f}"
    return "h = n/a" if report.h is None else f"h = {report.h:.2f}"


def summary_table(reports: Sequence[StudyReport]) -> str:
    """Plain-text table with one row per study and a total row."""
    header = ("Study", "RAG Wins", "CMA Wins", "Ties", "Both wrong", "Effect Size", "p (perm)", "Latency ms CMA/RAG")
    rows = []
    for r in reports:
        c = r.counts
        p = "n/a" if r.p_perm is None else f"{r.p_perm:.4f}"
        rows.append((r.study, str(c["rag_wins"]), str(c["cma_wins"]), str(c["tie"]), str(c["both_wrong"]),
                     _effect(r), p, f"{r.latency_ms['cma']:.2f}/{r.latency_ms['rag']:.2f}"))
    if len(reports) > 1:
        tot = {k: sum(r.counts[k] for r in reports) for k in ("rag_wins", "cma_wins", "tie", "both_wrong")}
        rows.append(("total", str(tot["rag_wins"]), str(tot["cma_wins"]), str(tot["tie"]),
                     str(tot["both_wrong"]), "", "", ""))
    widths = [max(len(x[i]) for x in [header, *rows]) for i in range(len(header))]
    fmt = lambda row: "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
    return "\n".join([fmt(header), fmt(tuple("-" * w for w in widths)), *map(fmt, rows)])


def reports_json(reports: Sequence[StudyReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"


def per_query_csv(reports: Sequence[StudyReport]) -> str:
    buf = io.StringIO()
    cols = ["study", "qid", "prompt", "score_cma", "score_rag", "verdict",
            "accuracy_cma", "accuracy_rag", "contamination_cma", "contamination_rag"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in reports:
        for q in r.per_query:
            w.writerow([r.study] + [getattr(q, c) for c in cols[1:]])
    return buf.getvalue()
