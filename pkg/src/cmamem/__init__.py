"""Graph-structured memory with spreading activation, mutating retrieval and
offline consolidation, plus a RAG baseline and a probe evaluation harness."""

from .activation import ActivationField, TraceStep, activate
from .config import Config
from .consolidation import ConsolidationReport
from .embedding import EmbeddingProvider, HashingEmbedder, cosine
from .engine import MemoryEngine
from .ingest import ClockRegression, IngestOutcome
from .params import EngineParams, ParamError
from .rag import RagBaseline, RagHit
from .retrieval import MutationReceipt, RetrievalOutcome, RetrievalResult, StaleResults
from .store import (
    Edge,
    EdgeKind,
    FragmentKind,
    FragmentState,
    MemoryFragment,
    MemoryStore,
    MutationCause,
    StoreCorruption,
    StoreError,
    TemporalClass,
)
from .summarize import ExtractiveSummarizer, Summarizer

__version__ = "0.1.0"

__all__ = [
    "ActivationField", "ClockRegression", "Config", "ConsolidationReport", "Edge", "EdgeKind",
    "EmbeddingProvider", "EngineParams", "ExtractiveSummarizer", "FragmentKind", "FragmentState",
    "HashingEmbedder", "IngestOutcome", "MemoryEngine", "MemoryFragment", "MemoryStore",
    "MutationCause", "MutationReceipt", "ParamError", "RagBaseline", "RagHit", "RetrievalOutcome",
    "RetrievalResult", "StaleResults", "StoreCorruption", "StoreError", "Summarizer",
    "TemporalClass", "TraceStep", "activate", "cosine",
]
