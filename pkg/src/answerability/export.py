"""Emit SFT and DPO training files carrying the answerability preference signal.

Chosen responses are the ground-truth answers; rejected responses come either
from a real run's failing responses or from synthetic templates. Every pair is
re-checked with the rules judge so a score-1/score-0 contract violation cannot
reach disk unnoticed.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .corpus import ANSWERABLE, QAItem
from .errors import NoRejectedCandidate
from .harness import RunRecord, score
from .judge import judge_response
from .lexicon import DEFAULT_REFUSAL_PHRASES


def export_sft(dataset: Iterable[QAItem], out_path: str | Path) -> int:
    """One {video, question, target} line per item; targets are the gt answers."""
    n = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for item in dataset:
            line = {
                "video": item.video.to_dict(),
                "question": item.question,
                "target": item.gt_answer,
            }
            fh.write(json.dumps(line, ensure_ascii=False) + "\n")
            n += 1
    return n


SYNTHETIC_REFUSAL = (
    "The question is unanswerable because the video does not provide that information."
)


def synthetic_rejected(item: QAItem) -> str:
    """A response guaranteed to score 0: a refusal for answerable items, a
    confident direct answer naming the swapped-in element for unanswerable ones."""
    if item.k == ANSWERABLE:
        return SYNTHETIC_REFUSAL
    if item.provenance is not None:
        replaced = item.provenance.alteration.replacement
        return f"It is the {replaced} shown in the video."
    return "The answer is clearly shown in the video."


def export_dpo(
    dataset: Iterable[QAItem],
    out_path: str | Path,
    *,
    rejected_run: RunRecord | None = None,
    lexicon: tuple[str, ...] = DEFAULT_REFUSAL_PHRASES,
    validate: bool = True,
) -> int:
    """Write {video, question, chosen, rejected} lines after a header naming the mode.

    Run mode requires a score-0 response per item in the run; synthetic mode
    fabricates one. Validation re-judges both sides with the rules judge.
    """
    mode = "run" if rejected_run is not None else "synthetic"
    n = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": "dpo", "rejected_source": mode}) + "\n")
        for item in dataset:
            chosen = item.gt_answer
            if rejected_run is not None:
                j = rejected_run.responses.get(item.id)
                if j is None or score(item, j) != 0:
                    raise NoRejectedCandidate(item.id)
                rejected = j.raw_text
            else:
                rejected = synthetic_rejected(item)
            if validate:
                cj = judge_response(item, chosen, mode="rules", lexicon=lexicon)
                rj = judge_response(item, rejected, mode="rules", lexicon=lexicon)
                if score(item, cj) != 1 or score(item, rj) != 0:
                    raise ValueError(
                        f"item {item.id!r}: pair violates the chosen=1/rejected=0 contract"
                    )
            line = {
                "video": item.video.to_dict(),
                "question": item.question,
                "chosen": chosen,
                "rejected": rejected,
            }
            fh.write(json.dumps(line, ensure_ascii=False) + "\n")
            n += 1
    return n
