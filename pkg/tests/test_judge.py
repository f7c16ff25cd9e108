from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from answerability.errors import JudgeParseFailure
from answerability.gateway import MockBackend, MockRule
from answerability.judge import (
    JudgedResponse,
    ResponseType,
    answerability_prediction,
    collapse_answerable,
    collapse_unanswerable,
    detect_refusal,
    judge_response,
)

from conftest import make_answerable_item, make_unanswerable_item


class TestDetectRefusal:
    def test_canonical_indicator_phrase(self):
        assert detect_refusal("The question is unanswerable because there is no cat.") is True

    def test_plain_answer(self):
        assert detect_refusal("The cat is brown.") is False

    def test_case_folding(self):
        assert detect_refusal("It is UNANSWERABLE.", ("unanswerable",)) is True

    def test_whitespace_normalized(self):
        assert detect_refusal("it cannot   be\nanswered here") is True

    def test_empty_lexicon_rejected(self):
        with pytest.raises(ValueError):
            detect_refusal("anything", ())


class TestRulesJudge:
    def test_unanswerable_consistent_reasoning_is_c(self):
        item = make_unanswerable_item("u1", replacement="dog")
        text = "The question is unanswerable because the video does not show a dog."
        j = judge_response(item, text, mode="rules")
        assert j.rtype is ResponseType.UNANSWERABLE_C
        assert j.refusal_detected is True
        assert j.llm_score == 4

    def test_unanswerable_different_reason_is_w(self):
        item = make_unanswerable_item("u1", replacement="dog")
        text = "The question is unanswerable because the lighting is too dark."
        j = judge_response(item, text, mode="rules")
        assert j.rtype is ResponseType.UNANSWERABLE_W
        assert j.llm_score == 2

    def test_answerable_exact_answer_is_correct(self):
        item = make_answerable_item("a1", answer="a red car")
        j = judge_response(item, "a red car", mode="rules")
        assert j.rtype is ResponseType.CORRECT
        assert j.refusal_detected is False
        assert j.llm_score == 4

    def test_answerable_substring_match_normalized(self):
        item = make_answerable_item("a1", answer="A Red Car")
        j = judge_response(item, "I can see a red car, parked.", mode="rules")
        assert j.rtype is ResponseType.CORRECT

    def test_answerable_miss_is_wrong(self):
        item = make_answerable_item("a1", answer="a red car")
        j = judge_response(item, "a blue truck", mode="rules")
        assert j.rtype is ResponseType.WRONG
        assert j.llm_score == 0

    def test_answerable_refusal_is_unanswerable_w(self):
        item = make_answerable_item("a1")
        j = judge_response(item, "This question is unanswerable.", mode="rules")
        assert j.rtype is ResponseType.UNANSWERABLE_W
        assert j.refusal_detected is True

    def test_unanswerable_direct_answer_is_wrong(self):
        item = make_unanswerable_item("u1")
        j = judge_response(item, "It is playing with a ball.", mode="rules")
        assert j.rtype is ResponseType.WRONG
        assert j.refusal_detected is False

    def test_deterministic(self):
        item = make_unanswerable_item("u1")
        text = "The question is unanswerable because the video does not show a dog."
        assert judge_response(item, text) == judge_response(item, text)


class TestExhaustiveness:
    @given(
        refusal=st.booleans(),
        mentions_key=st.booleans(),
        mentions_gt=st.booleans(),
        k=st.sampled_from([1, -1]),
    )
    def test_every_combination_classifies(self, refusal, mentions_key, mentions_gt, k):
        if k == 1:
            item = make_answerable_item("a", answer="a red car")
        else:
            item = make_unanswerable_item("u", replacement="dog")
        text = "so, "
        if refusal:
            text += "the question is unanswerable. "
        if mentions_key:
            text += "there is no dog here. "
        if mentions_gt:
            text += "a red car. "
        j = judge_response(item, text, mode="rules")
        assert j.rtype in ResponseType
        assert j.refusal_detected == (j.rtype in
                                      (ResponseType.UNANSWERABLE_W, ResponseType.UNANSWERABLE_C))


class TestLlmJudge:
    def playbook_backend(self, completion):
        return MockBackend([MockRule(match=".*", completion=completion)])

    def test_verdict_parsed(self):
        item = make_unanswerable_item("u1", replacement="dog")
        backend = self.playbook_backend("TYPE: unanswerable_correct_reason\nSCORE: 5")
        text = "The question is unanswerable because no dog appears."
        j = judge_response(item, text, backend=backend, mode="llm")
        assert j.rtype is ResponseType.UNANSWERABLE_C
        assert j.llm_score == 5
        assert j.judge_mode == "llm"

    def test_bad_verdict_raises(self):
        item = make_answerable_item("a1")
        backend = self.playbook_backend("whatever")
        with pytest.raises(JudgeParseFailure):
            judge_response(item, "some answer", backend=backend, mode="llm")

    def test_refusal_bit_wins_over_judge(self):
        # Judge claims a direct correct answer, but the text plainly refuses.
        item = make_answerable_item("a1", answer="a red car")
        backend = self.playbook_backend("TYPE: correct\nSCORE: 5")
        j = judge_response(item, "This is unanswerable.", backend=backend, mode="llm")
        assert j.rtype is ResponseType.UNANSWERABLE_W
        assert j.refusal_detected is True

    def test_judge_refusal_claim_without_refusal_text(self):
        item = make_answerable_item("a1", answer="a red car")
        backend = self.playbook_backend("TYPE: unanswerable\nSCORE: 2")
        j = judge_response(item, "a red car", backend=backend, mode="llm")
        assert j.rtype is ResponseType.CORRECT
        assert j.refusal_detected is False

    def test_unanswerable_judge_answered_with_refusal_text(self):
        item = make_unanswerable_item("u1", replacement="dog")
        backend = self.playbook_backend("TYPE: answered\nSCORE: 1")
        text = "The question is unanswerable; there is no dog."
        j = judge_response(item, text, backend=backend, mode="llm")
        assert j.rtype is ResponseType.UNANSWERABLE_C  # refusal bit wins, consistency from rules


class TestAnswerabilityPrediction:
    def test_refusal_predicts_unanswerable(self):
        j = JudgedResponse("i", "unanswerable", True, ResponseType.UNANSWERABLE_W, 2, "rules")
        assert answerability_prediction(j) == "unanswerable"

    def test_no_refusal_predicts_answerable(self):
        j = JudgedResponse("i", "an answer", False, ResponseType.WRONG, 0, "rules")
        assert answerability_prediction(j) == "answerable"


class TestViews:
    def test_answerable_view_collapses_refusals(self):
        assert collapse_answerable(ResponseType.UNANSWERABLE_W) == "unanswerable"
        assert collapse_answerable(ResponseType.UNANSWERABLE_C) == "unanswerable"
        assert collapse_answerable(ResponseType.CORRECT) == "correct"

    def test_unanswerable_view_collapses_answers(self):
        assert collapse_unanswerable(ResponseType.CORRECT) == "answered"
        assert collapse_unanswerable(ResponseType.WRONG) == "answered"
        assert collapse_unanswerable(ResponseType.UNANSWERABLE_C) == "unanswerable_c"

    def test_judged_response_consistency_enforced(self):
        with pytest.raises(ValueError):
            JudgedResponse("i", "text", False, ResponseType.UNANSWERABLE_C, 4, "rules")
        with pytest.raises(ValueError):
            JudgedResponse("i", "text", True, ResponseType.CORRECT, 4, "rules")

    def test_score_bounds_enforced(self):
        with pytest.raises(ValueError):
            JudgedResponse("i", "text", False, ResponseType.CORRECT, 6, "rules")
