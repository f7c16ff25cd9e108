"""Exporting SFT targets and DPO preference pairs.

Every DPO pair is re-checked with the rules judge before it reaches disk:
the chosen response must score 1 and the rejected response 0.
"""

import json
import tempfile
from pathlib import Path

from answerability.corpus import CategorizedLabel, QAItem, TripletDescription, VideoRef
from answerability.export import export_dpo, export_sft
from answerability.perturb import Alteration, AlteredDescription

video = VideoRef(id="clip-3", source_dataset="demo")
provenance = AlteredDescription(
    base_id="t9",
    altered=TripletDescription(
        source_object=CategorizedLabel("dog", "Animals"),
        relation=CategorizedLabel("running", "Intransitive Actions"),
        target_object=CategorizedLabel("pedestrians", "Independent Actors"),
    ),
    alteration=Alteration(kind="source_object", original="cat", replacement="dog",
                          category="Animals"),
)

items = [
    QAItem(id="a1", video=video, question="What is parked outside?",
           gt_answer="a red car", k=1),
    QAItem(
        id="u1", video=video,
        question="Where is the dog running to?",
        gt_answer="The question is unanswerable because the video does not show a dog.",
        k=-1, unanswerability_kind="object", provenance=provenance,
    ),
]

out = Path(tempfile.mkdtemp())

sft = out / "sft.jsonl"
export_sft(items, sft)
print("== SFT lines ==")
for line in sft.read_text().splitlines():
    d = json.loads(line)
    print(f"  Q: {d['question']}")
    print(f"  target: {d['target']}")

dpo = out / "dpo.jsonl"
export_dpo(items, dpo)  # synthetic rejected responses, validated pair by pair
print()
print("== DPO pairs (synthetic rejected) ==")
lines = dpo.read_text().splitlines()
print(f"  header: {lines[0]}")
for line in lines[1:]:
    d = json.loads(line)
    print(f"  Q: {d['question']}")
    print(f"    chosen:   {d['chosen']}")
    print(f"    rejected: {d['rejected']}")
