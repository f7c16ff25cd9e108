"""Altering scene descriptions: one same-category element swap per output.

Builds small category tables, then perturbs a scene-graph triplet and an
attribute-annotated caption, printing what changed and why the derived
question will be unanswerable.
"""

from answerability.corpus import (
    AdjectiveSpan,
    CaptionDescription,
    CategoryTable,
    DescriptionRecord,
    TableSet,
    TripletDescription,
)
from answerability.perturb import LexiconTagger, perturb_record

objects = CategoryTable(kind="object", categories={
    "Independent Actors": ("police officer", "match official", "pedestrians"),
    "Animals": ("cat", "dog", "bird"),
})
relations = CategoryTable(kind="relation", categories={
    "Static Relationships": ("looking at", "standing behind"),
    "Intransitive Actions": ("walking", "sitting", "running"),
})
attributes = CategoryTable(kind="attribute", categories={
    "Color": ("red", "blue", "green"),
    "Position": ("left", "right"),
    "Pattern": ("striped", "plain"),
    "Material": ("wooden", "metal"),
    "Size": ("big", "small"),
    "Status": ("open", "closed"),
    "Shape": ("round", "square"),
    "Human Status": ("standing", "seated"),
    "Uncategorized": ("misc", "other"),
})
tables = TableSet.of(objects, relations, attributes)

triplet = DescriptionRecord(
    id="demo-triplet",
    body=TripletDescription(
        source_object=objects.resolve("police officer"),
        relation=relations.resolve("looking at"),
        target_object=objects.resolve("pedestrians"),
    ),
)

print("== Triplet alteration ==")
print(f"base:    {triplet.body.render()}")
for seed in (1, 2, 3):
    ad = perturb_record(triplet, tables, global_seed=seed)[0]
    a = ad.alteration
    print(f"seed {seed}: {ad.altered.render()}")
    print(f"         swapped {a.kind}: {a.original!r} -> {a.replacement!r} "
          f"(category {a.category!r})")

print()
print("== Caption alteration ==")
text = "a red car parked near the big gate"
caption = DescriptionRecord(id="demo-caption", body=CaptionDescription(text=text))
tagger = LexiconTagger(attributes)
ad = perturb_record(caption, tables, global_seed=5, tagger=tagger)[0]
print(f"base:    {text}")
print(f"altered: {ad.altered.render()}")
span = ad.alteration.span
print(f"         swapped adjective {ad.alteration.original!r} -> "
      f"{ad.alteration.replacement!r} at bytes {span}")

print()
print("== Determinism ==")
again = perturb_record(triplet, tables, global_seed=1)[0]
print(f"seed 1 reproduced: {again.alteration == perturb_record(triplet, tables, 1)[0].alteration}")
