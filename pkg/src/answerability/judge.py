"""Classify model responses into the four response types and assign a 0-5 quality score.

Two modes: `llm` renders a grading prompt for an external judge endpoint and
parses its TYPE/SCORE verdict; `rules` is a deterministic offline fallback built
on refusal detection and normalized substring matching.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Any

from .corpus import ANSWERABLE, UNANSWERABLE, QAItem
from .errors import JudgeParseFailure
from .gateway import ChatRequest, TEMPERATURE_JUDGE, user_message
from .lexicon import DEFAULT_REFUSAL_PHRASES, contains_refusal, normalize_ws
from .prompts import load_prompt


class ResponseType(str, Enum):
    CORRECT = "correct"
    WRONG = "wrong"
    UNANSWERABLE_W = "unanswerable_w"  # refusal with reasoning inconsistent with ground truth
    UNANSWERABLE_C = "unanswerable_c"  # refusal with reasoning consistent with ground truth


# Three-way views used by the transition table.
ANSWERABLE_VIEW = ("correct", "wrong", "unanswerable")
UNANSWERABLE_VIEW = ("answered", "unanswerable_w", "unanswerable_c")


def collapse_answerable(rtype: ResponseType) -> str:
    """Answerable items do not distinguish refusal reasoning quality."""
    if rtype is ResponseType.CORRECT:
        return "correct"
    if rtype is ResponseType.WRONG:
        return "wrong"
    return "unanswerable"


def collapse_unanswerable(rtype: ResponseType) -> str:
    """Unanswerable items do not distinguish correctness of non-refusals."""
    if rtype is ResponseType.UNANSWERABLE_W:
        return "unanswerable_w"
    if rtype is ResponseType.UNANSWERABLE_C:
        return "unanswerable_c"
    return "answered"


# Fixed rules-mode rubric map.
RULES_SCORE = {
    ResponseType.CORRECT: 4,
    ResponseType.UNANSWERABLE_C: 4,
    ResponseType.UNANSWERABLE_W: 2,
    ResponseType.WRONG: 0,
}


@dataclass(frozen=True)
class JudgedResponse:
    item_id: str
    raw_text: str
    refusal_detected: bool
    rtype: ResponseType
    llm_score: int
    judge_mode: str

    def __post_init__(self) -> None:
        refusal_types = (ResponseType.UNANSWERABLE_W, ResponseType.UNANSWERABLE_C)
        if (self.rtype in refusal_types) != self.refusal_detected:
            raise ValueError("rtype and refusal_detected disagree")
        if not 0 <= self.llm_score <= 5:
            raise ValueError("llm_score must be within [0, 5]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "item_id": self.item_id,
            "raw_text": self.raw_text,
            "refusal_detected": self.refusal_detected,
            "rtype": self.rtype.value,
            "llm_score": self.llm_score,
            "judge_mode": self.judge_mode,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "JudgedResponse":
        return cls(
            item_id=d["item_id"],
            raw_text=d["raw_text"],
            refusal_detected=d["refusal_detected"],
            rtype=ResponseType(d["rtype"]),
            llm_score=d["llm_score"],
            judge_mode=d["judge_mode"],
        )


def detect_refusal(text: str, lexicon: tuple[str, ...] = DEFAULT_REFUSAL_PHRASES) -> bool:
    return contains_refusal(text, lexicon)


_PUNCT = re.compile(r"[^\w\s]")


def _normalize_match(text: str) -> str:
    return normalize_ws(_PUNCT.sub(" ", text))


def _gt_included(item: QAItem, text: str) -> bool:
    return _normalize_match(item.gt_answer) in _normalize_match(text)


def _gt_keyphrases(item: QAItem) -> list[str]:
    """Phrases whose presence marks reasoning consistent with the ground truth.

    The alteration's replacement is the element the question wrongly presumes,
    so a consistent refusal names it. Without provenance, fall back to the full
    ground-truth answer.
    """
    if item.provenance is not None:
        return [item.provenance.alteration.replacement]
    return [item.gt_answer]


def _judge_rules(
    item: QAItem, text: str, lexicon: tuple[str, ...]
) -> tuple[ResponseType, int, bool]:
    refusal = detect_refusal(text, lexicon)
    if refusal:
        if item.k == UNANSWERABLE:
            hay = _normalize_match(text)
            consistent = any(_normalize_match(p) in hay for p in _gt_keyphrases(item))
            rtype = ResponseType.UNANSWERABLE_C if consistent else ResponseType.UNANSWERABLE_W
        else:
            # For answerable items the refusal reasoning cannot match a real answer.
            rtype = ResponseType.UNANSWERABLE_W
    else:
        rtype = ResponseType.CORRECT if _gt_included(item, text) else ResponseType.WRONG
    return rtype, RULES_SCORE[rtype], refusal


_TYPE_LINE = re.compile(r"^\s*TYPE:\s*(\S+)\s*$", re.IGNORECASE | re.MULTILINE)
_SCORE_LINE = re.compile(r"^\s*SCORE:\s*([0-5])\s*$", re.IGNORECASE | re.MULTILINE)

_LLM_LABELS_ANSWERABLE = {
    "correct": ResponseType.CORRECT,
    "wrong": ResponseType.WRONG,
    "unanswerable": ResponseType.UNANSWERABLE_W,
}
_LLM_LABELS_UNANSWERABLE = {
    "answered": None,  # resolved against the rules fallback below
    "unanswerable_wrong_reason": ResponseType.UNANSWERABLE_W,
    "unanswerable_correct_reason": ResponseType.UNANSWERABLE_C,
}


def parse_judge_verdict(raw: str, k: int) -> tuple[str, int]:
    type_m = _TYPE_LINE.search(raw)
    score_m = _SCORE_LINE.search(raw)
    if not type_m or not score_m:
        raise JudgeParseFailure(raw)
    label = type_m.group(1).lower()
    labels = _LLM_LABELS_ANSWERABLE if k == ANSWERABLE else _LLM_LABELS_UNANSWERABLE
    if label not in labels:
        raise JudgeParseFailure(raw)
    return label, int(score_m.group(1))


def _judge_llm(
    item: QAItem,
    text: str,
    backend: Any,
    endpoint_id: str,
    model: str,
    lexicon: tuple[str, ...],
    template_dir: str | None = None,
) -> tuple[ResponseType, int, bool]:
    name = "judge_answerable" if item.k == ANSWERABLE else "judge_unanswerable"
    prompt = load_prompt(name, template_dir).format(
        question=item.question, gt_answer=item.gt_answer, response=text
    )
    req = ChatRequest(
        endpoint_id=endpoint_id,
        model=model,
        messages=(user_message(prompt),),
        temperature=TEMPERATURE_JUDGE,
    )
    raw = backend.chat(req).text
    label, score = parse_judge_verdict(raw, item.k)
    refusal = detect_refusal(text, lexicon)

    # The judge is authoritative except where it contradicts refusal detection;
    # then the refusal bit wins and the disagreement is resolved deterministically.
    rules_rtype, _, _ = _judge_rules(item, text, lexicon)
    if item.k == ANSWERABLE:
        rtype = _LLM_LABELS_ANSWERABLE[label]
        if refusal and rtype in (ResponseType.CORRECT, ResponseType.WRONG):
            rtype = ResponseType.UNANSWERABLE_W
        elif not refusal and rtype is ResponseType.UNANSWERABLE_W:
            rtype = rules_rtype
    else:
        mapped = _LLM_LABELS_UNANSWERABLE[label]
        if mapped is None:  # judge saw a direct answer
            rtype = rules_rtype if refusal else (
                ResponseType.CORRECT if _gt_included(item, text) else ResponseType.WRONG
            )
        else:
            rtype = mapped if refusal else rules_rtype
    return rtype, score, refusal


def judge_response(
    item: QAItem,
    text: str,
    backend: Any = None,
    mode: str = "rules",
    *,
    lexicon: tuple[str, ...] = DEFAULT_REFUSAL_PHRASES,
    endpoint_id: str = "judge",
    model: str = "mock",
    template_dir: str | None = None,
) -> JudgedResponse:
    if not item.question or not text:
        raise ValueError("item question and response text must be non-empty")
    if mode == "rules":
        rtype, score, refusal = _judge_rules(item, text, lexicon)
    elif mode == "llm":
        if backend is None:
            raise ValueError("llm judge mode requires a backend")
        rtype, score, refusal = _judge_llm(
            item, text, backend, endpoint_id, model, lexicon, template_dir
        )
    else:
        raise ValueError(f"unknown judge mode {mode!r}")
    return JudgedResponse(
        item_id=item.id,
        raw_text=text,
        refusal_detected=refusal,
        rtype=rtype,
        llm_score=score,
        judge_mode=mode,
    )


def answerability_prediction(j: JudgedResponse) -> str:
    """Binary answerability read-out: a refusal predicts 'unanswerable'."""
    return "unanswerable" if j.refusal_detected else "answerable"
