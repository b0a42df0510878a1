"""Command line entry point: ``cmamem <command> ...``.

Exit codes: 0 success, 2 input error, 3 acceptance failure, 4 store corruption.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Sequence

from filelock import FileLock, Timeout

from . import config as config_mod
from .engine import MemoryEngine
from .evaluation import STUDIES, RubricJudge, check_criteria, per_query_csv, reports_json, run_study, summary_table
from .ingest import ClockRegression
from .params import ParamError
from .rag import RagBaseline
from .store import MemoryStore, StoreCorruption, StoreError, canonical_json, fid_hex

EXIT_OK, EXIT_INPUT, EXIT_ACCEPTANCE, EXIT_CORRUPT = 0, 2, 3, 4
RAG_FILE = "rag.json"
SNAPSHOT_FILE = "snapshot.json"

logger = logging.getLogger("cmamem.cli")


class InputError(Exception):
    """Bad arguments or input files; maps to exit code 2."""


# -- helpers -------------------------------------------------------------


def _store_dir(args, cfg) -> Path:
    return Path(args.store or cfg.store_path)


def _require_store(path: Path) -> None:
    if not (path / SNAPSHOT_FILE).exists() and not (path / "wal.jsonl").exists():
        raise InputError(f"no store at {path}")


@contextmanager
def _locked(path: Path):
    path.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(path / ".lock"))
    try:
        lock.acquire(timeout=10)
    except Timeout:
        raise InputError(f"store {path} is locked by another process") from None
    try:
        yield
    finally:
        lock.release()


def _open_engine(path: Path, cfg) -> MemoryEngine:
    store = MemoryStore.open(path, cfg.params)
    return MemoryEngine(store=store)


def _close(engine: MemoryEngine, path: Path) -> None:
    engine.store.save(path)
    engine.store.close()


def read_corpus(path: str | Path) -> list[dict]:
    """Parse a JSONL corpus of ``{"text", "session", "ts"}`` records.

    Every line is validated before anything is ingested; errors cite the line.
    """
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read corpus {path}: {exc.strerror or exc}") from None
    records, last_ts = [], None
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise InputError(f"{path}:{lineno}: expected a JSON object")
        text = rec.get("text")
        session = rec.get("session", rec.get("session_id"))
        ts = rec.get("ts")
        if not isinstance(text, str) or not text.strip():
            raise InputError(f"{path}:{lineno}: missing or empty 'text'")
        if not isinstance(session, str) or not session:
            raise InputError(f"{path}:{lineno}: missing 'session'")
        if isinstance(ts, bool) or not isinstance(ts, (int, float)):
            raise InputError(f"{path}:{lineno}: missing or non-numeric 'ts'")
        if last_ts is not None and ts < last_ts:
            raise InputError(f"{path}:{lineno}: clock regression ({ts} < {last_ts})")
        last_ts = ts
        records.append({"text": text, "session": session, "ts": float(ts), "line": lineno})
    return records


def _load_rag(path: Path) -> RagBaseline:
    rag_path = path / RAG_FILE
    if not rag_path.exists():
        raise InputError(f"store {path} has no RAG baseline (run 'rag ingest' first)")
    return RagBaseline.load(rag_path)


# -- commands ------------------------------------------------------------


def cmd_ingest(args, cfg, out) -> int:
    records = read_corpus(args.corpus)
    path = _store_dir(args, cfg)
    created = merged = evicted = 0
    with _locked(path):
        engine = _open_engine(path, cfg)
        try:
            for rec in records:
                try:
                    res = engine.ingest(rec["text"], rec["session"], rec["ts"])
                except ClockRegression as exc:
                    raise InputError(f"{args.corpus}:{rec['line']}: {exc}") from None
                created += res.status == "created"
                merged += res.status == "merged"
                evicted += len(res.evicted)
            if args.rag:
                _rag_ingest(path, records, cfg)
        finally:
            _close(engine, path)
    out.write(f"created={created} merged={merged} evicted={evicted}\n")
    return EXIT_OK


def _rag_ingest(path: Path, records: list[dict], cfg) -> int:
    rag_path = path / RAG_FILE
    rag = RagBaseline.load(rag_path) if rag_path.exists() else RagBaseline(decay_rate=cfg.params.decay_rate)
    for rec in records:
        rag.ingest(rec["text"], rec["ts"])
    rag.save(rag_path)
    return len(records)


def cmd_rag_ingest(args, cfg, out) -> int:
    records = read_corpus(args.corpus)
    path = _store_dir(args, cfg)
    with _locked(path):
        n = _rag_ingest(path, records, cfg)
    out.write(f"documents={n}\n")
    return EXIT_OK


def _print_rag(hits, out) -> None:
    out.write("rank  score   sim     decay   text\n")
    for h in hits:
        out.write(f"{h.rank:<4}  {h.score:.4f}  {h.sim:.4f}  {h.decay:.4f}  {h.text}\n")


def cmd_rag_query(args, cfg, out) -> int:
    path = _store_dir(args, cfg)
    rag = _load_rag(path)
    _print_rag(rag.retrieve(args.prompt, args.k, args.now), out)
    return EXIT_OK


def cmd_query(args, cfg, out) -> int:
    if args.rag:
        return cmd_rag_query(args, cfg, out)
    path = _store_dir(args, cfg)
    _require_store(path)
    if args.no_mutate:
        engine = _open_engine(path, cfg)
        try:
            outcome = engine.retrieve(args.prompt, args.k, args.context, args.now, args.session)
        finally:
            engine.store.close()
    else:
        with _locked(path):
            engine = _open_engine(path, cfg)
            try:
                outcome = engine.retrieve(args.prompt, args.k, args.context, args.now, args.session)
                engine.apply_mutation(outcome)
            finally:
                _close(engine, path)
    if args.explain:
        out.write("rank  score   sim     act     rec     reinf   ctx     id                                text\n")
        for r in outcome.results:
            out.write(f"{r.rank:<4}  {r.score:.4f}  {r.sim:.4f}  {r.act:.4f}  {r.rec:.4f}  "
                      f"{r.reinf:.4f}  {r.ctx:.4f}  {fid_hex(r.fragment_id)}  {r.content}\n")
    else:
        out.write("rank  score   text\n")
        for r in outcome.results:
            out.write(f"{r.rank:<4}  {r.score:.4f}  {r.content}\n")
    return EXIT_OK


def cmd_consolidate(args, cfg, out) -> int:
    path = _store_dir(args, cfg)
    _require_store(path)
    with _locked(path):
        engine = _open_engine(path, cfg)
        try:
            now = args.now if args.now is not None else float(engine.store.meta.get("clock", 0.0))
            report = engine.consolidate(now, clock=None if args.no_timing else time.perf_counter)
        finally:
            _close(engine, path)
    out.write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_eval(args, cfg, out) -> int:
    studies = list(STUDIES) if args.study == "all" else [args.study]
    if args.study != "all" and args.study not in STUDIES:
        raise InputError(f"unknown study {args.study!r}; choose from all, {', '.join(STUDIES)}")
    seeds = cfg.eval_seeds if args.seeds is None else args.seeds
    judge = RubricJudge(cfg.judge_tie_margin, cfg.judge_both_wrong_floor, cfg.judge_ordering_bonus)
    clock = None if args.no_timing else time.perf_counter
    reports = [run_study(s, seeds, cfg.params, judge, clock, cfg.n_shuffles) for s in studies]
    if args.out:
        Path(args.out).write_text(reports_json(reports), encoding="utf-8")
    if args.csv:
        Path(args.csv).write_text(per_query_csv(reports), encoding="utf-8")
    out.write(summary_table(reports) + "\n\n")
    failed = []
    for report in reports:
        for crit in check_criteria(report):
            out.write(f"[{'PASS' if crit.passed else 'FAIL'}] {crit.key} {crit.description} ({crit.observed})\n")
            if not crit.passed:
                failed.append(crit.key)
    if failed:
        out.write(f"acceptance failed: {', '.join(failed)}\n")
        return EXIT_ACCEPTANCE
    return EXIT_OK


def _dump_table(store: MemoryStore, out) -> None:
    out.write(f"fragments ({len(store.fragments)})\n")
    out.write("id                                kind     state    salience  reinf   created_at        text\n")
    for fid in sorted(store.fragments):
        f = store.fragments[fid]
        out.write(f"{fid_hex(fid)}  {f.kind.value:<7}  {f.state.value:<7}  {f.salience:<8.4f}  "
                  f"{f.reinforcement:<6.3f}  {f.created_at:<16.3f}  {f.content}\n")
    out.write(f"\nedges ({len(store.edges)})\n")
    out.write("source                            target                            kind        weight\n")
    for key in sorted(store.edges, key=lambda k: (k[0], k[1], k[2].value)):
        e = store.edges[key]
        out.write(f"{fid_hex(e.source)}  {fid_hex(e.target)}  {e.kind.value:<10}  {e.weight:.4f}\n")
    out.write(f"\nmutation log ({len(store.mutation_log)})\n")
    for entry in store.mutation_log:
        out.write(canonical_json(entry.to_record()) + "\n")


def cmd_dump(args, cfg, out) -> int:
    path = _store_dir(args, cfg)
    _require_store(path)
    store = MemoryStore.open(path, cfg.params)
    try:
        if args.format == "json":
            out.write(store.dumps().decode("utf-8"))
        else:
            _dump_table(store, out)
    finally:
        store.close()
    return EXIT_OK


def cmd_config_show(args, cfg, out) -> int:
    out.write(cfg.dumps())
    return EXIT_OK


# -- parser --------------------------------------------------------------


def _seeds(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("need at least one seed")
    return seeds


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value config file (default $CMA_CONFIG)")
    common.add_argument("--store", help="store directory (default from config store_path)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging, including activation traces")

    p = _Parser(prog="cmamem", description="Graph memory engine with a RAG baseline and probe evaluation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("ingest", parents=[common], help="ingest a JSONL corpus")
    q.add_argument("corpus")
    q.add_argument("--rag", action="store_true", help="also ingest into the RAG baseline")
    q.set_defaults(func=cmd_ingest)

    q = sub.add_parser("query", parents=[common], help="ranked retrieval")
    q.add_argument("prompt")
    q.add_argument("--k", type=_positive, default=5)
    q.add_argument("--context", action="append", default=[], help="context line (repeatable)")
    q.add_argument("--session", help="use this session's conversation buffer as context")
    q.add_argument("--now", type=float, help="query time (default: last ingest time)")
    q.add_argument("--explain", action="store_true", help="print the factor breakdown")
    q.add_argument("--no-mutate", action="store_true", help="read-only retrieval")
    q.add_argument("--rag", action="store_true", help="query the RAG baseline instead")
    q.set_defaults(func=cmd_query)

    rag = sub.add_parser("rag", help="RAG baseline commands")
    rsub = rag.add_subparsers(dest="rag_command", required=True, parser_class=_Parser)
    q = rsub.add_parser("ingest", parents=[common])
    q.add_argument("corpus")
    q.set_defaults(func=cmd_rag_ingest)
    q = rsub.add_parser("query", parents=[common])
    q.add_argument("prompt")
    q.add_argument("--k", type=_positive, default=5)
    q.add_argument("--now", type=float)
    q.set_defaults(func=cmd_rag_query)

    q = sub.add_parser("consolidate", parents=[common], help="run one consolidation tick")
    q.add_argument("--now", type=float, help="tick time (default: last ingest time)")
    q.add_argument("--no-timing", action="store_true", help="report zero duration")
    q.set_defaults(func=cmd_consolidate)

    q = sub.add_parser("eval", parents=[common], help="run probe studies")
    q.add_argument("--study", default="all")
    q.add_argument("--seeds", type=_seeds)
    q.add_argument("--out", help="write the JSON report here")
    q.add_argument("--csv", help="write per-query rows here")
    q.add_argument("--no-timing", action="store_true", help="zero latencies for byte-stable reports")
    q.set_defaults(func=cmd_eval)

    q = sub.add_parser("dump", parents=[common], help="list fragments, edges and the mutation log")
    q.add_argument("--format", choices=("json", "table"), default="json")
    q.set_defaults(func=cmd_dump)

    cfgp = sub.add_parser("config", help="configuration commands")
    csub = cfgp.add_subparsers(dest="config_command", required=True, parser_class=_Parser)
    q = csub.add_parser("show", parents=[common])
    q.set_defaults(func=cmd_config_show)
    return p


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    err = sys.stderr
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = config_mod.load(args.config)
        return args.func(args, cfg, out)
    except (InputError, ParamError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT
    except StoreCorruption as exc:
        err.write(f"store corruption: {exc}\n")
        return EXIT_CORRUPT
    except StoreError as exc:
        err.write(f"store error: {exc}\n")
        return EXIT_CORRUPT


if __name__ == "__main__":
    sys.exit(main())
