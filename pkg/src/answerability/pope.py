"""Existence-based question splitting: probe, classify, and account costs.

A question is decomposed into closed yes/no existence checks. Any correct "no"
means the question was rightly found unanswerable; a "no" alongside a wrong
probe answer means the refusal was right for the wrong reason; all-"yes" falls
through to asking the original question.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .corpus import QAItem
from .errors import MissingOriginalOutcome, ParseFailure, UnparsedProbe
from .gateway import ChatRequest, TEMPERATURE_JUDGE, user_message
from .harness import RunRecord
from .judge import JudgedResponse, ResponseType, RULES_SCORE, judge_response
from .lexicon import DEFAULT_REFUSAL_PHRASES
from .prompts import load_prompt


@dataclass
class ExistenceProbe:
    sub_question: str
    expected: str | None = None  # yes | no
    model_answer: str | None = None  # yes | no | unparsed

    def to_dict(self) -> dict[str, Any]:
        return {
            "sub_question": self.sub_question,
            "expected": self.expected,
            "model_answer": self.model_answer,
        }


@dataclass
class PopeOutcome:
    item_id: str
    probes: list[ExistenceProbe]
    final_rtype: ResponseType
    model_calls: int
    judge_calls: int

    def __post_init__(self) -> None:
        if self.model_calls < len(self.probes):
            raise ValueError("model_calls cannot be below the probe count")

    def to_dict(self) -> dict[str, Any]:
        return {
            "item_id": self.item_id,
            "probes": [p.to_dict() for p in self.probes],
            "final_rtype": self.final_rtype.value,
            "model_calls": self.model_calls,
            "judge_calls": self.judge_calls,
        }


_PROBE_LINE = re.compile(r"^\s*PROBE:\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE)


def decompose(
    question: str,
    backend: Any,
    *,
    endpoint_id: str = "decomposer",
    model: str = "mock",
    template_dir: str | None = None,
) -> list[ExistenceProbe]:
    """Ask the decomposer LLM for existence probes and parse the PROBE: lines."""
    if not question:
        raise ValueError("question must be non-empty")
    prompt = load_prompt("pope_decompose", template_dir).format(question=question)
    req = ChatRequest(
        endpoint_id=endpoint_id,
        model=model,
        messages=(user_message(prompt),),
        temperature=TEMPERATURE_JUDGE,
    )
    raw = backend.chat(req).text
    probes = [ExistenceProbe(sub_question=q) for q in _PROBE_LINE.findall(raw)]
    if not probes:
        raise ParseFailure(raw, "no PROBE: lines in decomposition")
    return probes


def fill_expected_from_provenance(probes: list[ExistenceProbe], item: QAItem) -> None:
    """Probes naming the swapped-in element expect "no"; all others expect "yes"."""
    replacement = None
    if item.provenance is not None:
        replacement = item.provenance.alteration.replacement.lower()
    for p in probes:
        if replacement and replacement in p.sub_question.lower():
            p.expected = "no"
        else:
            p.expected = "yes"


_YESNO = re.compile(r"[a-z]+")


def parse_yes_no(text: str) -> str:
    """Map a probe answer to yes/no by its leading word; anything else is unparsed."""
    m = _YESNO.search(text.lower())
    if m and m.group(0) in ("yes", "no"):
        return m.group(0)
    return "unparsed"


def classify_pope(
    probes: list[ExistenceProbe], original_outcome: ResponseType | None = None
) -> ResponseType:
    """Apply the rule table over answered probes."""
    for p in probes:
        if p.model_answer not in ("yes", "no"):
            raise UnparsedProbe(f"probe {p.sub_question!r} answered {p.model_answer!r}")
        if p.expected not in ("yes", "no"):
            raise UnparsedProbe(f"probe {p.sub_question!r} has no expected answer")
    if any(p.model_answer == "no" for p in probes):
        all_correct = all(p.model_answer == p.expected for p in probes)
        return ResponseType.UNANSWERABLE_C if all_correct else ResponseType.UNANSWERABLE_W
    if original_outcome is None:
        raise MissingOriginalOutcome("all probes answered yes but no original outcome given")
    return original_outcome


def cost_report(outcomes: list[PopeOutcome], direct_baseline_calls: int) -> dict[str, float]:
    if not outcomes:
        raise ValueError("no outcomes to report costs for")
    total_probes = sum(len(o.probes) for o in outcomes)
    model_calls = sum(o.model_calls for o in outcomes)
    judge_calls = sum(o.judge_calls for o in outcomes)
    return {
        "model_calls": model_calls,
        "judge_calls": judge_calls,
        "dataset_multiplier": total_probes / len(outcomes),
        "eval_cost_multiplier": (model_calls + judge_calls) / direct_baseline_calls,
    }


def _base_description(item: QAItem) -> str | None:
    """Reconstruct the unaltered description by swapping the alteration back."""
    if item.provenance is None:
        return None
    ad = item.provenance
    altered_text = ad.altered.render()
    return altered_text.replace(ad.alteration.replacement, ad.alteration.original, 1)


def _verify_expected(
    probes: list[ExistenceProbe],
    item: QAItem,
    backend: Any,
    endpoint_id: str,
    model: str,
) -> int:
    """Verifier LLM answers each probe against the true scene; returns call count."""
    base = _base_description(item) or item.gt_answer
    calls = 0
    for p in probes:
        prompt = (
            f"True scene description: {base}\n"
            f"Answer strictly yes or no.\n{p.sub_question}"
        )
        req = ChatRequest(
            endpoint_id=endpoint_id,
            model=model,
            messages=(user_message(prompt),),
            temperature=TEMPERATURE_JUDGE,
        )
        p.expected = parse_yes_no(backend.chat(req).text)
        calls += 1
    return calls


def run_pope(
    dataset: list[QAItem],
    backend: Any,
    *,
    model_endpoint_id: str,
    model: str,
    decomposer_endpoint_id: str = "decomposer",
    decomposer_model: str = "mock",
    verifier_endpoint_id: str = "verifier",
    verifier_model: str = "mock",
    expected_mode: str = "provenance",  # provenance | verifier
    judge_mode: str = "rules",
    run_id: str = "pope",
    lexicon: tuple[str, ...] = DEFAULT_REFUSAL_PHRASES,
    template_dir: str | None = None,
) -> tuple[RunRecord, list[PopeOutcome]]:
    """Evaluate a dataset with the probe-then-ask mechanism; emits a harness-compatible run."""
    run = RunRecord(run_id=run_id, model_id=f"{model}+pope", judge_mode=judge_mode)
    outcomes: list[PopeOutcome] = []
    for item in sorted(dataset, key=lambda i: i.id):
        probes = decompose(
            item.question,
            backend,
            endpoint_id=decomposer_endpoint_id,
            model=decomposer_model,
            template_dir=template_dir,
        )
        judge_calls = 0
        if expected_mode == "verifier":
            judge_calls += _verify_expected(
                probes, item, backend, verifier_endpoint_id, verifier_model
            )
        else:
            fill_expected_from_provenance(probes, item)

        model_calls = 0
        for p in probes:
            req = ChatRequest(
                endpoint_id=model_endpoint_id,
                model=model,
                messages=(user_message(p.sub_question, item.video.frame_uris),),
                temperature=0.0,
            )
            p.model_answer = parse_yes_no(backend.chat(req).text)
            model_calls += 1

        if all(p.model_answer == "yes" for p in probes):
            req = ChatRequest(
                endpoint_id=model_endpoint_id,
                model=model,
                messages=(user_message(item.question, item.video.frame_uris),),
                temperature=0.0,
            )
            answer_text = backend.chat(req).text
            model_calls += 1
            judged = judge_response(
                item, answer_text, backend=backend, mode=judge_mode, lexicon=lexicon,
                template_dir=template_dir,
            )
            if judge_mode == "llm":
                judge_calls += 1
            original_outcome: ResponseType | None = judged.rtype
            if original_outcome in (ResponseType.UNANSWERABLE_W, ResponseType.UNANSWERABLE_C):
                # The model refused the original despite passing every probe;
                # keep the judged refusal as the final outcome.
                final = original_outcome
            else:
                final = classify_pope(probes, original_outcome)
            response = judged
        else:
            final = classify_pope(probes)
            denied = next(p for p in probes if p.model_answer == "no")
            text = (
                "The question is unanswerable: the check "
                f"'{denied.sub_question}' was answered no."
            )
            response = JudgedResponse(
                item_id=item.id,
                raw_text=text,
                refusal_detected=True,
                rtype=final,
                llm_score=RULES_SCORE[final],
                judge_mode=judge_mode,
            )

        run.responses[item.id] = response
        outcomes.append(
            PopeOutcome(
                item_id=item.id,
                probes=probes,
                final_rtype=final,
                model_calls=model_calls,
                judge_calls=judge_calls,
            )
        )
    return run, outcomes


def write_outcomes(outcomes: list[PopeOutcome], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for o in outcomes:
            fh.write(json.dumps(o.to_dict(), ensure_ascii=False) + "\n")
