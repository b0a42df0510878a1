"""Deterministic extractive summarizer.

Stands behind the same three calls an LLM-backed provider would answer:
condensing one oversize observation, naming the theme of a cluster, and
naming a routine that repeats across episodes.
"""

from __future__ import annotations

import re
from collections import Counter
from typing import Protocol, Sequence

from .embedding import content_tokens

_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")


class Summarizer(Protocol):
    def summarize(self, text: str) -> str: ...

    def abstract(self, texts: Sequence[str]) -> str: ...

    def gist(self, texts: Sequence[str], n_episodes: int) -> str: ...


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_RE.split(text.strip()) if s.strip()]


def _shared_tokens(texts: Sequence[str], n: int) -> list[str]:
    doc_freq: Counter[str] = Counter()
    total: Counter[str] = Counter()
    for text in texts:
        toks = content_tokens(text)
        total.update(toks)
        doc_freq.update(set(toks))
    ranked = sorted(total, key=lambda t: (-doc_freq[t], -total[t], t))
    shared = [t for t in ranked if doc_freq[t] >= 2]
    rest = [t for t in ranked if doc_freq[t] < 2]
    return (shared + rest)[:n]


class ExtractiveSummarizer:
    def __init__(self, keywords: int = 5):
        self.keywords = keywords

    def summarize(self, text: str) -> str:
        sentences = split_sentences(text)
        tf = Counter(content_tokens(text))
        top = sorted(tf, key=lambda t: (-tf[t], t))[: self.keywords]
        parts = [sentences[0]] if sentences else []
        if len(sentences) > 1:
            parts.append(sentences[-1])
        parts.append("[" + ", ".join(top) + "]")
        return " ".join(parts)

    def abstract(self, texts: Sequence[str]) -> str:
        return f"Insight: {' '.join(_shared_tokens(texts, self.keywords))} ({len(texts)} fragments)"

    def gist(self, texts: Sequence[str], n_episodes: int) -> str:
        return f"Routine: {' '.join(_shared_tokens(texts, self.keywords))} (seen in {n_episodes} episodes)"


_default = ExtractiveSummarizer()


def summarize_oversize(text: str) -> str:
    return _default.summarize(text)
