from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from answerability.corpus import (
    CaptionDescription,
    CategorizedLabel,
    CategoryTable,
    DescriptionRecord,
    QAItem,
    TableSet,
    TripletDescription,
    VideoRef,
)
from answerability.perturb import Alteration, AlteredDescription

ATTRIBUTE_CATEGORY_NAMES = (
    "Color",
    "Position",
    "Pattern",
    "Material",
    "Size",
    "Status",
    "Shape",
    "Human Status",
    "Uncategorized",
)


def make_attribute_table(**overrides) -> CategoryTable:
    base = {
        "Color": ("red", "blue", "green"),
        "Position": ("left", "right"),
        "Pattern": ("striped", "plain"),
        "Material": ("wooden", "metal"),
        "Size": ("big", "small"),
        "Status": ("open", "closed"),
        "Shape": ("round", "square"),
        "Human Status": ("standing", "seated"),
        "Uncategorized": ("misc", "other"),
    }
    base.update(overrides)
    return CategoryTable(kind="attribute", categories=base)


def make_object_table() -> CategoryTable:
    return CategoryTable(
        kind="object",
        categories={
            "Independent Actors": ("police officer", "match official", "pedestrians"),
            "Animals": ("cat", "dog", "bird"),
            "Instruments": ("guitar", "piano"),
        },
    )


def make_relation_table() -> CategoryTable:
    return CategoryTable(
        kind="relation",
        categories={
            "Static Relationships": ("looking at", "standing behind"),
            "Intransitive Actions": ("walking", "sitting", "running"),
        },
    )


@pytest.fixture
def object_table() -> CategoryTable:
    return make_object_table()


@pytest.fixture
def relation_table() -> CategoryTable:
    return make_relation_table()


@pytest.fixture
def attribute_table() -> CategoryTable:
    return make_attribute_table()


@pytest.fixture
def tables(object_table, relation_table, attribute_table) -> TableSet:
    return TableSet.of(object_table, relation_table, attribute_table)


def make_video(vid: str = "v1") -> VideoRef:
    return VideoRef(id=vid, source_dataset="fixture", frame_uris=(f"{vid}/0.jpg", f"{vid}/1.jpg"))


def make_triplet_record(
    rec_id: str = "t1",
    src: str = "police officer",
    rel: str = "looking at",
    tgt: str = "pedestrians",
) -> DescriptionRecord:
    table_o = make_object_table()
    table_r = make_relation_table()
    body = TripletDescription(
        source_object=table_o.resolve(src),
        relation=table_r.resolve(rel),
        target_object=table_o.resolve(tgt),
    )
    return DescriptionRecord(id=rec_id, body=body, video=make_video(f"video-{rec_id}"))


def make_provenance(
    base_id: str = "t1",
    original: str = "cat",
    replacement: str = "dog",
    kind: str = "source_object",
    category: str = "Animals",
) -> AlteredDescription:
    body = TripletDescription(
        source_object=CategorizedLabel(replacement, category),
        relation=CategorizedLabel("walking", "Intransitive Actions"),
        target_object=CategorizedLabel("pedestrians", "Independent Actors"),
    )
    return AlteredDescription(
        base_id=base_id,
        altered=body,
        alteration=Alteration(kind=kind, original=original, replacement=replacement,
                              category=category),
        video=make_video(f"video-{base_id}"),
    )


def make_unanswerable_item(
    item_id: str,
    kind: str = "object",
    replacement: str = "dog",
    original: str = "cat",
    relation_subtype: str | None = None,
    question: str | None = None,
) -> QAItem:
    alteration_kind = {"object": "source_object", "relation": "relation",
                       "attribute": "attribute"}[kind]
    category = {"object": "Animals", "relation": "Static Relationships",
                "attribute": "Color"}[kind]
    prov = make_provenance(
        base_id=f"base-{item_id}",
        original=original,
        replacement=replacement,
        kind=alteration_kind,
        category=category,
    )
    return QAItem(
        id=item_id,
        video=make_video(f"video-{item_id}"),
        question=question or f"What is the {replacement} doing in the video?",
        gt_answer=(
            f"The question is unanswerable because the video does not show a {replacement}."
        ),
        k=-1,
        unanswerability_kind=kind,
        relation_subtype=relation_subtype,
        provenance=prov,
    )


def make_answerable_item(
    item_id: str, answer: str = "a red car", question: str | None = None
) -> QAItem:
    return QAItem(
        id=item_id,
        video=make_video(f"video-{item_id}"),
        question=question or "What is parked near the building?",
        gt_answer=answer,
        k=1,
    )


def write_table_file(path: Path, table: CategoryTable) -> Path:
    path.write_text(json.dumps(table.to_dict()), encoding="utf-8")
    return path


@pytest.fixture
def table_files(tmp_path, object_table, relation_table, attribute_table):
    return {
        "object": write_table_file(tmp_path / "objects.json", object_table),
        "relation": write_table_file(tmp_path / "relations.json", relation_table),
        "attribute": write_table_file(tmp_path / "attributes.json", attribute_table),
    }
