import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmamem.evaluation.judge import RubricJudge, VerdictLabel, covering_rank

FACT = "Maya switched her order to iced matcha."
OLD = "Maya's usual order is a flat white."


def test_covering_rank_needs_every_content_token():
    docs = ["matcha is green", "Actually Maya switched her cafe order to iced matcha today."]
    assert covering_rank(FACT, docs) == 1
    assert covering_rank(FACT, docs[:1]) is None


def test_correct_side_wins():
    v = RubricJudge().judge("q", [FACT], [OLD], [FACT], [OLD])
    assert v.label is VerdictLabel.A_WINS
    assert v.score_a == 1.0 and v.score_b == 0.0
    assert "System A matched 1/1" in v.rationale


def test_contamination_cancels_accuracy():
    side = RubricJudge().score_side([FACT, OLD], [FACT], [OLD])
    assert side.accuracy == 1.0
    assert side.contamination == 1.0
    assert side.score == 0.0


def test_both_wrong_and_tie():
    j = RubricJudge()
    assert j.judge("q", ["nothing"], ["else"], [FACT], []).label is VerdictLabel.BOTH_WRONG
    assert j.label(0.6, 0.55) is VerdictLabel.TIE
    assert j.label(0.6, 0.5) is VerdictLabel.TIE  # the margin is inclusive
    assert j.label(0.61, 0.5) is VerdictLabel.A_WINS


def test_ordering_bonus_only_when_in_order():
    j = RubricJudge()
    first, second = "The kettle whistled loudly.", "The toast popped up."
    ordered = j.score_side([first, second], [first, second], [], ("accuracy", "ordering"))
    reversed_ = j.score_side([second, first], [first, second], [], ("accuracy", "ordering"))
    plain = j.score_side([first, second], [first, second], [])
    assert plain.score == 1.0
    assert ordered.ordering_bonus == pytest.approx(0.1)
    assert reversed_.ordering_bonus == 0.0


def test_expected_must_be_non_empty():
    with pytest.raises(ValueError):
        RubricJudge().score_side(["x"], [], [])


SWAP = {VerdictLabel.A_WINS: VerdictLabel.B_WINS, VerdictLabel.B_WINS: VerdictLabel.A_WINS,
        VerdictLabel.TIE: VerdictLabel.TIE, VerdictLabel.BOTH_WRONG: VerdictLabel.BOTH_WRONG}

POOL = [FACT, OLD, "The kettle whistled loudly.", "The toast popped up.", "Unrelated filler text."]


@given(st.lists(st.sampled_from(POOL), max_size=4), st.lists(st.sampled_from(POOL), max_size=4))
def test_swapping_sides_swaps_label(a, b):
    j = RubricJudge()
    v1 = j.judge("q", a, b, [FACT, "The toast popped up."], [OLD])
    v2 = j.judge("q", b, a, [FACT, "The toast popped up."], [OLD])
    assert v2.label is SWAP[v1.label]
    assert 0.0 <= v1.score_a <= 1.0 and 0.0 <= v1.score_b <= 1.0
