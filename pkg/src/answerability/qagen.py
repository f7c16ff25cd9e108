"""Generate unanswerable QA pairs from altered descriptions and assemble balanced datasets.

The generator LLM receives the altered description and the change, emits a
tagged VERDICT/QUESTION/ANSWER completion, and performs the similarity/grammar
filtering inline; this module parses the completion into an outcome.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .corpus import RELATION, UNANSWERABLE, QAItem, VideoRef
from .errors import DuplicateId, InsufficientPool
from .gateway import ChatRequest, TEMPERATURE_GENERATION, user_message
from .lexicon import DEFAULT_REFUSAL_PHRASES, contains_refusal
from .perturb import AlteredDescription
from .prompts import load_prompt

STATUSES = ("accepted", "filtered_similar", "filtered_grammar", "parse_failure")


@dataclass(frozen=True)
class GenerationOutcome:
    status: str
    item: QAItem | None
    raw: str

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if (self.status == "accepted") != (self.item is not None):
            raise ValueError("item must be present exactly when status is accepted")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"status": self.status, "raw": self.raw}
        if self.item is not None:
            d["item"] = self.item.to_dict()
        return d


def render_change(ad: AlteredDescription) -> str:
    a = ad.alteration
    return f"{a.kind}: replaced '{a.original}' with '{a.replacement}' (category: {a.category})"


_VERDICT = re.compile(r"^\s*VERDICT:\s*(\S+)\s*$", re.IGNORECASE | re.MULTILINE)
_QUESTION = re.compile(r"^\s*QUESTION:\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE)
_ANSWER = re.compile(r"^\s*ANSWER:\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE)

_VERDICT_STATUS = {
    "too_similar": "filtered_similar",
    "ungrammatical": "filtered_grammar",
}


def parse_generation(raw: str) -> tuple[str, str | None, str | None]:
    """Return (status, question, answer); any contract violation is a parse failure."""
    m = _VERDICT.search(raw)
    if not m:
        return "parse_failure", None, None
    verdict = m.group(1).lower()
    if verdict in _VERDICT_STATUS:
        return _VERDICT_STATUS[verdict], None, None
    if verdict != "ok":
        return "parse_failure", None, None
    qm, am = _QUESTION.search(raw), _ANSWER.search(raw)
    if not qm or not am:
        return "parse_failure", None, None
    return "accepted", qm.group(1), am.group(1)


def generate_unanswerable_qa(
    ad: AlteredDescription,
    video: VideoRef,
    backend: Any,
    *,
    endpoint_id: str = "generator",
    model: str = "mock",
    item_id: str | None = None,
    template_dir: str | None = None,
    refusal_phrases: tuple[str, ...] = DEFAULT_REFUSAL_PHRASES,
    subtype_map: Mapping[str, str] | None = None,
    temperature: float = TEMPERATURE_GENERATION,
    seed: int | None = None,
) -> GenerationOutcome:
    """Prompt the generator with (altered description, change) and parse the outcome."""
    kind = ad.alteration.unanswerability_kind()
    prompt = load_prompt(f"qagen_{kind}", template_dir).format(
        altered_description=ad.altered.render(), change=render_change(ad)
    )
    req = ChatRequest(
        endpoint_id=endpoint_id,
        model=model,
        messages=(user_message(prompt),),
        temperature=temperature,
        seed=seed,
    )
    raw = backend.chat(req).text
    status, question, answer = parse_generation(raw)
    if status != "accepted":
        return GenerationOutcome(status=status, item=None, raw=raw)
    assert question is not None and answer is not None
    # Accepted answers must carry a detectable refusal indicator.
    if not contains_refusal(answer, refusal_phrases):
        return GenerationOutcome(status="parse_failure", item=None, raw=raw)
    subtype = None
    if kind == RELATION and subtype_map:
        subtype = subtype_map.get(ad.alteration.category)
    item = QAItem(
        id=item_id or f"{ad.base_id}-u0",
        video=video,
        question=question,
        gt_answer=answer,
        k=UNANSWERABLE,
        unanswerability_kind=kind,
        relation_subtype=subtype,
        provenance=ad,
    )
    return GenerationOutcome(status="accepted", item=item, raw=raw)


def build_balanced_dataset(
    unanswerable_pool: Iterable[QAItem],
    answerable_pool: Iterable[QAItem],
    per_category: int,
    seed: int,
) -> list[QAItem]:
    """Sample per_category items per unanswerability kind plus an equal answerable count.

    Selection and the final shuffle are driven only by the seed and item ids,
    so a pool ordering change cannot alter the dataset.
    """
    by_kind: dict[str, list[QAItem]] = {"object": [], "relation": [], "attribute": []}
    for item in unanswerable_pool:
        if item.k == UNANSWERABLE and item.unanswerability_kind in by_kind:
            by_kind[item.unanswerability_kind].append(item)
    answerable = [i for i in answerable_pool if i.k != UNANSWERABLE]

    for kind, pool in by_kind.items():
        if len(pool) < per_category:
            raise InsufficientPool(kind, len(pool), per_category)
    need_answerable = 3 * per_category
    if len(answerable) < need_answerable:
        raise InsufficientPool("answerable", len(answerable), need_answerable)

    rng = random.Random(seed)
    chosen: list[QAItem] = []
    for kind in ("object", "relation", "attribute"):
        pool = sorted(by_kind[kind], key=lambda i: i.id)
        chosen.extend(rng.sample(pool, per_category))
    chosen.extend(rng.sample(sorted(answerable, key=lambda i: i.id), need_answerable))

    seen: set[str] = set()
    for item in chosen:
        if item.id in seen:
            raise DuplicateId(item.id)
        seen.add(item.id)
    rng.shuffle(chosen)
    return chosen
