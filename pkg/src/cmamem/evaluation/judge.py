"""Deterministic rubric judge for anonymized A/B retrieval comparisons."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence

from ..embedding import content_tokens, tokenize


class VerdictLabel(str, Enum):
    A_WINS = "A_wins"
    B_WINS = "B_wins"
    TIE = "tie"
    BOTH_WRONG = "both_wrong"


@dataclass(frozen=True)
class SideScore:
    accuracy: float
    contamination: float
    ordering_bonus: float
    score: float
    matched: tuple[str, ...]
    contaminated: tuple[str, ...]


@dataclass(frozen=True)
class Verdict:
    label: VerdictLabel
    score_a: float
    score_b: float
    rationale: str
    side_a: SideScore
    side_b: SideScore


class JudgeProvider(Protocol):
    def judge(self, prompt: str, retrieved_a: Sequence[str], retrieved_b: Sequence[str],
              expected: Sequence[str], forbidden: Sequence[str],
              rubric: Sequence[str] = ("accuracy",)) -> Verdict: ...


def fact_tokens(fact: str) -> frozenset[str]:
    toks = content_tokens(fact)
    return frozenset(toks or tokenize(fact))


def covering_rank(fact: str, retrieved: Sequence[str]) -> int | None:
    """Position of the first retrieved text containing every token of ``fact``."""
    need = fact_tokens(fact)
    if not need:
        return None
    for i, text in enumerate(retrieved):
        if need <= set(tokenize(text)):
            return i
    return None


class RubricJudge:
    """Accuracy minus contamination, with an optional ordering bonus.

    >>> RubricJudge().judge("q", ["Paris is the capital"], [], ["capital Paris"], []).label.value
    'A_wins'
    """

    def __init__(self, tie_margin: float = 0.1, both_wrong_floor: float = 0.25, ordering_bonus: float = 0.1):
        self.tie_margin = tie_margin
        self.both_wrong_floor = both_wrong_floor
        self.ordering_bonus = ordering_bonus

    def score_side(self, retrieved: Sequence[str], expected: Sequence[str], forbidden: Sequence[str],
                   rubric: Sequence[str] = ("accuracy",)) -> SideScore:
        if not expected:
            raise ValueError("expected facts must be non-empty")
        ranks = [covering_rank(f, retrieved) for f in expected]
        matched = tuple(f for f, r in zip(expected, ranks) if r is not None)
        contaminated = tuple(f for f in forbidden if covering_rank(f, retrieved) is not None)
        accuracy = len(matched) / len(expected)
        contamination = len(contaminated) / len(forbidden) if forbidden else 0.0
        base = max(0.0, accuracy - contamination)
        bonus = 0.0
        found = [r for r in ranks if r is not None]
        if "ordering" in rubric and base > 0 and len(found) >= 2 and found == sorted(found):
            bonus = self.ordering_bonus
        return SideScore(accuracy, contamination, bonus, min(1.0, base + bonus), matched, contaminated)

    def label(self, score_a: float, score_b: float) -> VerdictLabel:
        if score_a < self.both_wrong_floor and score_b < self.both_wrong_floor:
            return VerdictLabel.BOTH_WRONG
        if abs(score_a - score_b) <= self.tie_margin + 1e-12:
            return VerdictLabel.TIE
        return VerdictLabel.A_WINS if score_a > score_b else VerdictLabel.B_WINS

    def judge(self, prompt: str, retrieved_a: Sequence[str], retrieved_b: Sequence[str],
              expected: Sequence[str], forbidden: Sequence[str],
              rubric: Sequence[str] = ("accuracy",)) -> Verdict:
        a = self.score_side(retrieved_a, expected, forbidden, rubric)
        b = self.score_side(retrieved_b, expected, forbidden, rubric)
        label = self.label(a.score, b.score)
        rationale = "; ".join(
            f"System {name} matched {len(s.matched)}/{len(expected)} expected"
            + (f" ({', '.join(repr(m) for m in s.matched)})" if s.matched else "")
            + (f", contaminated by {', '.join(repr(c) for c in s.contaminated)}" if s.contaminated else "")
            for name, s in (("A", a), ("B", b))
        )
        return Verdict(label, a.score, b.score, f"{label.value}: {rationale}", a, b)
