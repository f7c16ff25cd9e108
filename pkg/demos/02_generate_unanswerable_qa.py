"""Generating unanswerable QA pairs from altered descriptions.

Uses the scripted mock backend in place of a hosted LLM: one rule produces a
well-formed QA completion, one flags the alteration as too similar, and one
returns an unparseable reply, so all generation outcomes appear.
"""

from answerability.corpus import CategorizedLabel, TripletDescription, VideoRef
from answerability.gateway import MockBackend, MockRule
from answerability.perturb import Alteration, AlteredDescription
from answerability.qagen import generate_unanswerable_qa

video = VideoRef(id="clip-042", source_dataset="demo", frame_uris=("042/0.jpg",))


def altered(base_id: str, original: str, replacement: str) -> AlteredDescription:
    return AlteredDescription(
        base_id=base_id,
        altered=TripletDescription(
            source_object=CategorizedLabel(replacement, "Animals"),
            relation=CategorizedLabel("walking", "Intransitive Actions"),
            target_object=CategorizedLabel("pedestrians", "Independent Actors"),
        ),
        alteration=Alteration(
            kind="source_object", original=original, replacement=replacement,
            category="Animals",
        ),
        video=video,
    )


backend = MockBackend([
    MockRule(
        match="with 'dog'",
        completion=(
            "VERDICT: ok\n"
            "QUESTION: What is the dog chasing in the video?\n"
            "ANSWER: The question is unanswerable because the video does not show a dog."
        ),
    ),
    MockRule(match="with 'kitten'", completion="VERDICT: too_similar"),
    MockRule(match=".*", completion="I refuse to follow the requested format."),
])

for base_id, original, replacement in (
    ("t1", "cat", "dog"),        # accepted
    ("t2", "cat", "kitten"),     # filtered: near-synonym swap
    ("t3", "cat", "bird"),       # parse failure: free-form completion
):
    outcome = generate_unanswerable_qa(altered(base_id, original, replacement), video, backend)
    print(f"{base_id}: {outcome.status}")
    if outcome.item:
        print(f"    Q: {outcome.item.question}")
        print(f"    A: {outcome.item.gt_answer}")
        print(f"    kind={outcome.item.unanswerability_kind} k={outcome.item.k}")
