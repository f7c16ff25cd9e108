"""Existence-probe splitting as an unanswerability detector, with cost accounting.

The question is decomposed into yes/no existence checks. A correct "no" yields
a well-grounded refusal without asking the original question; all-"yes" falls
through to the original. The cost report shows why this is expensive.
"""

from answerability.gateway import MockBackend, MockRule
from answerability.corpus import CategorizedLabel, QAItem, TripletDescription, VideoRef
from answerability.perturb import Alteration, AlteredDescription
from answerability.pope import cost_report, run_pope

video = VideoRef(id="clip-7", source_dataset="demo")
# the altered element ("cat" swapped in for "dog") tells the probe filler
# which existence check must come back "no"
provenance = AlteredDescription(
    base_id="t-demo",
    altered=TripletDescription(
        source_object=CategorizedLabel("cat", "Animals"),
        relation=CategorizedLabel("sitting", "Intransitive Actions"),
        target_object=CategorizedLabel("pedestrians", "Independent Actors"),
    ),
    alteration=Alteration(kind="source_object", original="dog", replacement="cat",
                          category="Animals"),
)
items = [
    QAItem(
        id="u1", video=video,
        question="What is the breed of the cat in the video?",
        gt_answer="The question is unanswerable because the video does not show a cat.",
        k=-1, unanswerability_kind="object", provenance=provenance,
    ),
    QAItem(id="a1", video=video, question="What is parked outside?",
           gt_answer="a red car", k=1),
]

backend = MockBackend([
    MockRule(
        match="existence checks.*breed of the cat",
        completion="PROBE: Is there a cat in the video?\nPROBE: Is the cat fully visible?",
    ),
    MockRule(
        match="existence checks.*parked",
        completion="PROBE: Is there a car in the video?",
    ),
    MockRule(match="Is there a cat", completion="No, I do not see a cat."),
    MockRule(match="Is the cat fully visible", completion="No."),
    MockRule(match="Is there a car", completion="Yes."),
    MockRule(match="What is parked", completion="a red car"),
])

run, outcomes = run_pope(
    items, backend,
    model_endpoint_id="model", model="mock",
    expected_mode="provenance",
)

for outcome in outcomes:
    print(f"{outcome.item_id}: {outcome.final_rtype.value}")
    for p in outcome.probes:
        print(f"    {p.sub_question}  expected={p.expected} got={p.model_answer}")
    print(f"    model calls: {outcome.model_calls}, judge calls: {outcome.judge_calls}")

cost = cost_report(outcomes, direct_baseline_calls=len(items))
print()
print(f"dataset multiplier:   {cost['dataset_multiplier']:.2f}x")
print(f"eval cost multiplier: {cost['eval_cost_multiplier']:.2f}x")
