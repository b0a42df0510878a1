"""One object wiring store, embedder, summarizer and the lifecycle stages."""

from __future__ import annotations

import time
from typing import Callable, Sequence

from .activation import ActivationField, activate
from .consolidation import ConsolidationReport, consolidate_tick
from .embedding import EmbeddingProvider, HashingEmbedder
from .ingest import IngestOutcome, Ingestor, session_buffer
from .params import EngineParams
from .retrieval import MutationReceipt, RetrievalOutcome, apply_mutation, retrieve
from .store import MemoryStore
from .summarize import ExtractiveSummarizer, Summarizer


class MemoryEngine:
    """Ingest, activation, mutating retrieval and consolidation over a store.

    >>> eng = MemoryEngine()
    >>> eng.ingest("Water boils at 100C.", "s1", 0.0).status
    'created'
    """

    def __init__(
        self,
        params: EngineParams | None = None,
        store: MemoryStore | None = None,
        embedder: EmbeddingProvider | None = None,
        summarizer: Summarizer | None = None,
    ):
        if store is None:
            store = MemoryStore(params)
        elif params is not None and params != store.params:
            raise ValueError("params disagree with the store's params")
        self.store = store
        self.embedder = embedder or HashingEmbedder(store.params.dim)
        if self.embedder.dimension() != store.params.dim:
            raise ValueError("embedder dimension does not match params.dim")
        self.summarizer = summarizer or ExtractiveSummarizer()
        self._ingestor = Ingestor(store, self.embedder, self.summarizer)

    @property
    def params(self) -> EngineParams:
        return self.store.params

    def ingest(self, text: str, session_id: str, ts: float) -> IngestOutcome:
        return self._ingestor.ingest(text, session_id, ts)

    def activate(self, query: str, context: Sequence[str] = ()) -> ActivationField:
        return activate(self.store, self.embedder, query, context)

    def retrieve(self, query: str, k: int = 5, context: Sequence[str] = (),
                 now: float | None = None, session_id: str | None = None) -> RetrievalOutcome:
        """Read-only ranking. With ``session_id`` and no explicit context the
        session's conversation buffer is used as context."""
        if not context and session_id is not None:
            context = session_buffer(self.store, session_id)
        return retrieve(self.store, self.embedder, query, k, context, now)

    def apply_mutation(self, outcome: RetrievalOutcome, now: float | None = None) -> MutationReceipt:
        return apply_mutation(self.store, outcome, now)

    def query(self, query: str, k: int = 5, context: Sequence[str] = (),
              now: float | None = None, mutate: bool = True) -> RetrievalOutcome:
        outcome = self.retrieve(query, k, context, now)
        if mutate:
            self.apply_mutation(outcome)
        return outcome

    def consolidate(self, now: float, clock: Callable[[], float] | None = time.perf_counter) -> ConsolidationReport:
        return consolidate_tick(self.store, self.embedder, now, self.summarizer, clock=clock)
