from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from answerability.corpus import (
    AdjectiveSpan,
    CaptionDescription,
    CategoryTable,
    QAItem,
    TableSet,
    VideoRef,
    dump_corpus,
    load_category_table,
    load_corpus,
)
from answerability.errors import (
    DuplicateId,
    DuplicateMember,
    EmptyCategory,
    MalformedLine,
    UnknownCategory,
    WrongCategorySet,
)

from conftest import make_answerable_item, make_unanswerable_item


def write_lines(path, dicts):
    path.write_text("\n".join(json.dumps(d) for d in dicts) + "\n", encoding="utf-8")
    return path


def triplet_lines():
    return [
        {"id": "t1", "source_object": "police officer", "relation": "looking at",
         "target_object": "pedestrians"},
        {"id": "t2", "source_object": "cat", "relation": "walking", "target_object": "dog"},
        {"id": "t3", "source_object": "match official", "relation": "standing behind",
         "target_object": "guitar"},
    ]


class TestLoadCorpusTriplets:
    def test_three_valid_lines_load(self, tmp_path, tables):
        path = write_lines(tmp_path / "t.jsonl", triplet_lines())
        records = load_corpus(path, "triplets", tables=tables)
        assert len(records) == 3
        assert records[0].id == "t1"

    def test_relation_category_resolved_from_table(self, tmp_path, tables):
        path = write_lines(tmp_path / "t.jsonl", triplet_lines()[:1])
        (rec,) = load_corpus(path, "triplets", tables=tables)
        assert rec.body.relation.label == "looking at"
        assert rec.body.relation.category == "Static Relationships"
        assert rec.body.source_object.category == "Independent Actors"

    def test_unknown_label_raises(self, tmp_path, tables):
        bad = [{"id": "t1", "source_object": "spaceship", "relation": "walking",
                "target_object": "cat"}]
        path = write_lines(tmp_path / "t.jsonl", bad)
        with pytest.raises(UnknownCategory):
            load_corpus(path, "triplets", tables=tables)

    def test_duplicate_id_rejected(self, tmp_path, tables):
        lines = triplet_lines()
        lines[1]["id"] = "t1"
        path = write_lines(tmp_path / "t.jsonl", lines)
        with pytest.raises(DuplicateId):
            load_corpus(path, "triplets", tables=tables)

    def test_malformed_json_reports_line(self, tmp_path, tables):
        path = tmp_path / "t.jsonl"
        path.write_text('{"id": "t1"\nnot json\n', encoding="utf-8")
        with pytest.raises(MalformedLine) as exc:
            load_corpus(path, "triplets", tables=tables)
        assert exc.value.line_no == 1


class TestLoadCorpusCaptions:
    def test_caption_with_spans(self, tmp_path, tables):
        text = "a red car parked on the left"
        line = {
            "id": "c1",
            "text": text,
            "adjective_spans": [{"start": 2, "end": 5, "surface": "red", "category": "Color"}],
        }
        path = write_lines(tmp_path / "c.jsonl", [line])
        (rec,) = load_corpus(path, "captions", tables=tables)
        assert rec.body.adjective_spans[0].surface == "red"

    def test_span_surface_mismatch_is_malformed(self, tmp_path, tables):
        line = {
            "id": "c1",
            "text": "a red car",
            "adjective_spans": [{"start": 2, "end": 5, "surface": "blue", "category": "Color"}],
        }
        path = write_lines(tmp_path / "c.jsonl", [line])
        with pytest.raises(MalformedLine):
            load_corpus(path, "captions", tables=tables)

    def test_unknown_span_category(self, tmp_path, tables):
        line = {
            "id": "c1",
            "text": "a red car",
            "adjective_spans": [{"start": 2, "end": 5, "surface": "red", "category": "Hue"}],
        }
        path = write_lines(tmp_path / "c.jsonl", [line])
        with pytest.raises(UnknownCategory):
            load_corpus(path, "captions", tables=tables)

    def test_multibyte_offsets_are_bytes(self, tmp_path, tables):
        text = "café red door"
        start = text.encode("utf-8").index(b"red")
        line = {
            "id": "c1",
            "text": text,
            "adjective_spans": [
                {"start": start, "end": start + 3, "surface": "red", "category": "Color"}
            ],
        }
        path = write_lines(tmp_path / "c.jsonl", [line])
        (rec,) = load_corpus(path, "captions", tables=tables)
        assert rec.body.adjective_spans[0].start == 6  # byte offset past 2-byte e-acute


class TestQAItems:
    def test_unanswerable_requires_indicator(self):
        with pytest.raises(ValueError):
            QAItem(
                id="q1",
                video=VideoRef(id="v", source_dataset="x"),
                question="?",
                gt_answer="The video shows a cat.",
                k=-1,
                unanswerability_kind="object",
            ).to_dict() and QAItem.from_dict(
                {
                    "id": "q1",
                    "video": {"id": "v", "source": "x", "frames": []},
                    "question": "?",
                    "gt_answer": "The video shows a cat.",
                    "k": -1,
                    "kind": "object",
                }
            )

    def test_answerable_must_not_carry_kind(self):
        with pytest.raises(ValueError):
            QAItem(
                id="q1",
                video=VideoRef(id="v", source_dataset="x"),
                question="?",
                gt_answer="yes",
                k=1,
                unanswerability_kind="object",
            )

    def test_round_trip_with_provenance(self, tmp_path):
        items = [make_unanswerable_item("u1"), make_answerable_item("a1")]
        path = tmp_path / "qa.jsonl"
        dump_corpus(items, path, "qa_items")
        loaded = load_corpus(path, "qa_items")
        assert loaded == items

    def test_schema_keys_exact(self):
        item = make_unanswerable_item("u1")
        keys = set(item.to_dict())
        assert keys == {"id", "video", "question", "gt_answer", "k", "kind", "provenance"}
        ans = make_answerable_item("a1")
        assert set(ans.to_dict()) == {"id", "video", "question", "gt_answer", "k"}
        assert set(item.to_dict()["video"]) <= {"id", "source", "frames", "duration_s"}


class TestCategoryTable:
    def test_attribute_table_with_nine_categories_loads(self, tmp_path, attribute_table):
        path = tmp_path / "attr.json"
        path.write_text(json.dumps(attribute_table.to_dict()), encoding="utf-8")
        table = load_category_table(path, "attribute")
        assert set(table.categories) == set(attribute_table.categories)

    def test_two_member_object_table_loads(self, tmp_path):
        path = tmp_path / "obj.json"
        path.write_text(json.dumps({"kind": "object", "categories": {"Animals": ["cat", "dog"]}}))
        table = load_category_table(path, "object")
        assert table.members("Animals") == ("cat", "dog")

    def test_attribute_table_missing_category_rejected(self, tmp_path, attribute_table):
        cats = attribute_table.to_dict()["categories"]
        del cats["Human Status"]
        path = tmp_path / "attr.json"
        path.write_text(json.dumps({"kind": "attribute", "categories": cats}))
        with pytest.raises(WrongCategorySet):
            load_category_table(path, "attribute")

    def test_duplicate_member_rejected(self):
        with pytest.raises(DuplicateMember):
            CategoryTable(kind="object", categories={"A": ("cat",), "B": ("cat",)})

    def test_empty_category_rejected(self):
        with pytest.raises(EmptyCategory):
            CategoryTable(kind="object", categories={"A": ()})

    def test_every_label_resolves_to_one_category(self, tables):
        for kind in ("object", "relation", "attribute"):
            table = tables.get(kind)
            for cat, members in table.categories.items():
                for label in members:
                    assert table.category_of(label) == cat


class TestRoundTripAndPurity:
    def test_triplet_round_trip(self, tmp_path, tables):
        path = write_lines(tmp_path / "t.jsonl", triplet_lines())
        records = load_corpus(path, "triplets", tables=tables)
        out = tmp_path / "t2.jsonl"
        dump_corpus(records, out, "triplets")
        assert load_corpus(out, "triplets", tables=tables) == records

    def test_caption_round_trip(self, tmp_path, tables):
        line = {
            "id": "c1",
            "text": "a red car",
            "adjective_spans": [{"start": 2, "end": 5, "surface": "red", "category": "Color"}],
            "video": {"id": "v9", "source": "fixture", "frames": ["v9/0.jpg"]},
        }
        path = write_lines(tmp_path / "c.jsonl", [line])
        records = load_corpus(path, "captions", tables=tables)
        out = tmp_path / "c2.jsonl"
        dump_corpus(records, out, "captions")
        assert load_corpus(out, "captions", tables=tables) == records

    def test_identical_bytes_identical_records(self, tmp_path, tables):
        path = write_lines(tmp_path / "t.jsonl", triplet_lines())
        first = load_corpus(path, "triplets", tables=tables)
        second = load_corpus(path, "triplets", tables=tables)
        assert first == second


@given(
    st.lists(
        st.sampled_from(["police officer", "match official", "pedestrians", "cat", "dog"]),
        min_size=1,
        max_size=6,
        unique=True,
    )
)
def test_table_resolution_is_total_over_members(labels):
    table = CategoryTable(kind="object", categories={"All": tuple(labels)})
    for label in labels:
        resolved = table.resolve(label)
        assert resolved.category == "All"
        assert resolved.label == label


def test_span_validation_rejects_overlap():
    with pytest.raises(ValueError):
        CaptionDescription(
            text="a red blue car",
            adjective_spans=(
                AdjectiveSpan(2, 10, "red blue", "Color"),
                AdjectiveSpan(6, 10, "blue", "Color"),
            ),
        )
