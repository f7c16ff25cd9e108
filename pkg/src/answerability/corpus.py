"""Shared data model and line-delimited loaders for descriptions, tables, and QA items.

Corpus files are UTF-8 text with one JSON record per line. Adjective spans use
UTF-8 byte offsets into the caption text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .errors import (
    DuplicateId,
    DuplicateMember,
    EmptyCategory,
    MalformedLine,
    UnknownCategory,
    WrongCategorySet,
)
from .lexicon import DEFAULT_REFUSAL_PHRASES, contains_refusal

OBJECT = "object"
RELATION = "relation"
ATTRIBUTE = "attribute"
TABLE_KINDS = (OBJECT, RELATION, ATTRIBUTE)

UNANSWERABILITY_KINDS = (OBJECT, RELATION, ATTRIBUTE)
RELATION_SUBTYPES = ("intra_static", "intra_dynamic", "inter_static", "inter_dynamic")

ANSWERABLE = 1
UNANSWERABLE = -1

# The attribute table must carry exactly these nine category names.
ATTRIBUTE_CATEGORIES = frozenset(
    {
        "Color",
        "Position",
        "Pattern",
        "Material",
        "Size",
        "Status",
        "Shape",
        "Human Status",
        "Uncategorized",
    }
)

CORPUS_FORMATS = ("triplets", "captions", "qa_items")


@dataclass(frozen=True)
class VideoRef:
    """Reference to a video as an opaque id plus sampled-frame URIs; never decoded here."""

    id: str
    source_dataset: str
    frame_uris: tuple[str, ...] = ()
    duration_s: float | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("video id must be non-empty")
        if self.duration_s is not None and self.duration_s < 0:
            raise ValueError("duration_s must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "id": self.id,
            "source": self.source_dataset,
            "frames": list(self.frame_uris),
        }
        if self.duration_s is not None:
            d["duration_s"] = self.duration_s
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "VideoRef":
        return cls(
            id=d["id"],
            source_dataset=d.get("source", ""),
            frame_uris=tuple(d.get("frames", ())),
            duration_s=d.get("duration_s"),
        )


@dataclass(frozen=True)
class CategorizedLabel:
    label: str
    category: str

    def __post_init__(self) -> None:
        if not self.label:
            raise ValueError("label must be non-empty")

    def to_dict(self) -> dict[str, str]:
        return {"label": self.label, "category": self.category}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CategorizedLabel":
        return cls(label=d["label"], category=d["category"])


@dataclass(frozen=True)
class TripletDescription:
    """Scene-graph style description: (source object, relation, target object)."""

    source_object: CategorizedLabel
    relation: CategorizedLabel
    target_object: CategorizedLabel

    ELEMENTS = ("source_object", "relation", "target_object")

    def element(self, name: str) -> CategorizedLabel:
        if name not in self.ELEMENTS:
            raise KeyError(name)
        return getattr(self, name)

    def render(self) -> str:
        return f"{self.source_object.label} {self.relation.label} {self.target_object.label}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "type": "triplet",
            "source_object": self.source_object.to_dict(),
            "relation": self.relation.to_dict(),
            "target_object": self.target_object.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TripletDescription":
        return cls(
            source_object=CategorizedLabel.from_dict(d["source_object"]),
            relation=CategorizedLabel.from_dict(d["relation"]),
            target_object=CategorizedLabel.from_dict(d["target_object"]),
        )


@dataclass(frozen=True)
class AdjectiveSpan:
    """Byte-offset span of one adjective in a caption, tagged with its category."""

    start: int
    end: int
    surface: str
    category: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "start": self.start,
            "end": self.end,
            "surface": self.surface,
            "category": self.category,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "AdjectiveSpan":
        return cls(start=d["start"], end=d["end"], surface=d["surface"], category=d["category"])


@dataclass(frozen=True)
class CaptionDescription:
    """Natural-language description with optional pre-annotated adjective spans."""

    text: str
    adjective_spans: tuple[AdjectiveSpan, ...] = ()

    def __post_init__(self) -> None:
        validate_spans(self.text, self.adjective_spans)

    def render(self) -> str:
        return self.text

    def to_dict(self) -> dict[str, Any]:
        return {
            "type": "caption",
            "text": self.text,
            "adjective_spans": [s.to_dict() for s in self.adjective_spans],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CaptionDescription":
        return cls(
            text=d["text"],
            adjective_spans=tuple(AdjectiveSpan.from_dict(s) for s in d.get("adjective_spans", ())),
        )


def validate_spans(text: str, spans: Iterable[AdjectiveSpan]) -> None:
    """Spans must be in-bounds, sorted, non-overlapping, and match the byte slice."""
    raw = text.encode("utf-8")
    prev_end = 0
    for s in spans:
        if not (0 <= s.start < s.end <= len(raw)):
            raise ValueError(f"span [{s.start},{s.end}) out of bounds for {len(raw)}-byte text")
        if s.start < prev_end:
            raise ValueError("adjective spans overlap or are unsorted")
        surface = raw[s.start : s.end].decode("utf-8")
        if surface != s.surface:
            raise ValueError(f"span surface {s.surface!r} != text slice {surface!r}")
        prev_end = s.end


Description = TripletDescription | CaptionDescription


def description_from_dict(d: dict[str, Any]) -> Description:
    t = d.get("type")
    if t == "triplet":
        return TripletDescription.from_dict(d)
    if t == "caption":
        return CaptionDescription.from_dict(d)
    raise ValueError(f"unknown description type {t!r}")


@dataclass
class CategoryTable:
    """Category name -> members, with a reverse index; a label belongs to one category."""

    kind: str
    categories: dict[str, tuple[str, ...]]
    _by_label: dict[str, str] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in TABLE_KINDS:
            raise ValueError(f"unknown table kind {self.kind!r}")
        self._by_label = {}
        for name, members in self.categories.items():
            if not members:
                raise EmptyCategory(name)
            for label in members:
                if label in self._by_label:
                    raise DuplicateMember(label)
                self._by_label[label] = name
        if self.kind == ATTRIBUTE and set(self.categories) != ATTRIBUTE_CATEGORIES:
            raise WrongCategorySet(set(self.categories), set(ATTRIBUTE_CATEGORIES))

    def category_of(self, label: str) -> str | None:
        return self._by_label.get(label)

    def members(self, category: str) -> tuple[str, ...]:
        return self.categories.get(category, ())

    def resolve(self, label: str) -> CategorizedLabel:
        cat = self.category_of(label)
        if cat is None:
            raise UnknownCategory(label)
        return CategorizedLabel(label=label, category=cat)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "categories": {k: list(v) for k, v in self.categories.items()}}


@dataclass
class TableSet:
    """The three category tables a perturbation pipeline works against."""

    tables: dict[str, CategoryTable] = field(default_factory=dict)

    def get(self, kind: str) -> CategoryTable:
        if kind not in self.tables:
            raise UnknownCategory(f"<no {kind} table loaded>")
        return self.tables[kind]

    def has(self, kind: str) -> bool:
        return kind in self.tables

    @classmethod
    def of(cls, *tables: CategoryTable) -> "TableSet":
        return cls({t.kind: t for t in tables})


def load_category_table(path: str | Path, kind: str) -> CategoryTable:
    """Load a {"kind":..., "categories": {name: [members...]}} JSON file."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    file_kind = raw.get("kind", kind)
    if file_kind != kind:
        raise ValueError(f"table at {path} declares kind {file_kind!r}, expected {kind!r}")
    categories = {name: tuple(members) for name, members in raw["categories"].items()}
    return CategoryTable(kind=kind, categories=categories)


@dataclass(frozen=True)
class DescriptionRecord:
    """A description with corpus identity and (optionally) its source video."""

    id: str
    body: Description
    video: VideoRef | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("record id must be non-empty")


@dataclass(frozen=True)
class QAItem:
    """One evaluation/training unit: a question over a video with its answerability label."""

    id: str
    video: VideoRef
    question: str
    gt_answer: str
    k: int
    unanswerability_kind: str | None = None
    relation_subtype: str | None = None
    provenance: Any | None = None  # perturb.AlteredDescription

    def __post_init__(self) -> None:
        if self.k not in (ANSWERABLE, UNANSWERABLE):
            raise ValueError(f"k must be +1 or -1, got {self.k}")
        if self.k == ANSWERABLE and self.unanswerability_kind is not None:
            raise ValueError("answerable item must not carry an unanswerability kind")
        if self.k == UNANSWERABLE and self.unanswerability_kind not in UNANSWERABILITY_KINDS:
            raise ValueError("unanswerable item must carry kind object/relation/attribute")
        if self.relation_subtype is not None and self.relation_subtype not in RELATION_SUBTYPES:
            raise ValueError(f"unknown relation subtype {self.relation_subtype!r}")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "id": self.id,
            "video": self.video.to_dict(),
            "question": self.question,
            "gt_answer": self.gt_answer,
            "k": self.k,
        }
        if self.unanswerability_kind is not None:
            d["kind"] = self.unanswerability_kind
        if self.relation_subtype is not None:
            d["relation_subtype"] = self.relation_subtype
        if self.provenance is not None:
            d["provenance"] = self.provenance.to_dict()
        return d

    @classmethod
    def from_dict(
        cls,
        d: dict[str, Any],
        refusal_phrases: tuple[str, ...] = DEFAULT_REFUSAL_PHRASES,
    ) -> "QAItem":
        from .perturb import AlteredDescription  # cycle: perturb builds on corpus types

        k = int(d["k"])
        if k == UNANSWERABLE and not contains_refusal(d["gt_answer"], refusal_phrases):
            raise ValueError(
                f"item {d.get('id')!r}: unanswerable gt_answer lacks a refusal indicator"
            )
        prov = d.get("provenance")
        return cls(
            id=d["id"],
            video=VideoRef.from_dict(d["video"]),
            question=d["question"],
            gt_answer=d["gt_answer"],
            k=k,
            unanswerability_kind=d.get("kind"),
            relation_subtype=d.get("relation_subtype"),
            provenance=AlteredDescription.from_dict(prov) if prov else None,
        )


# --- line-delimited corpus IO ------------------------------------------------


def _triplet_from_line(d: dict[str, Any], tables: TableSet) -> DescriptionRecord:
    objects = tables.get(OBJECT)
    relations = tables.get(RELATION)
    body = TripletDescription(
        source_object=objects.resolve(d["source_object"]),
        relation=relations.resolve(d["relation"]),
        target_object=objects.resolve(d["target_object"]),
    )
    video = VideoRef.from_dict(d["video"]) if "video" in d else None
    return DescriptionRecord(id=d["id"], body=body, video=video)


def _triplet_to_line(rec: DescriptionRecord) -> dict[str, Any]:
    body = rec.body
    assert isinstance(body, TripletDescription)
    d: dict[str, Any] = {
        "id": rec.id,
        "source_object": body.source_object.label,
        "relation": body.relation.label,
        "target_object": body.target_object.label,
    }
    if rec.video is not None:
        d["video"] = rec.video.to_dict()
    return d


def _caption_from_line(d: dict[str, Any], tables: TableSet) -> DescriptionRecord:
    spans = tuple(AdjectiveSpan.from_dict(s) for s in d.get("adjective_spans", ()))
    if spans and tables.has(ATTRIBUTE):
        attr = tables.get(ATTRIBUTE)
        for s in spans:
            if s.category not in attr.categories:
                raise UnknownCategory(s.category)
    body = CaptionDescription(text=d["text"], adjective_spans=spans)
    video = VideoRef.from_dict(d["video"]) if "video" in d else None
    return DescriptionRecord(id=d["id"], body=body, video=video)


def _caption_to_line(rec: DescriptionRecord) -> dict[str, Any]:
    body = rec.body
    assert isinstance(body, CaptionDescription)
    d: dict[str, Any] = {"id": rec.id, "text": body.text}
    if body.adjective_spans:
        d["adjective_spans"] = [s.to_dict() for s in body.adjective_spans]
    if rec.video is not None:
        d["video"] = rec.video.to_dict()
    return d


def load_corpus(
    path: str | Path,
    format: str,
    *,
    tables: TableSet | None = None,
    refusal_phrases: tuple[str, ...] = DEFAULT_REFUSAL_PHRASES,
) -> list[Any]:
    """Load and validate a line-delimited corpus file.

    For triplets both the object and relation tables are required; captions
    validate span categories when an attribute table is supplied.
    """
    if format not in CORPUS_FORMATS:
        raise ValueError(f"unknown corpus format {format!r}")
    tables = tables or TableSet()
    records: list[Any] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedLine(line_no, f"invalid JSON: {e}") from e
            try:
                if format == "triplets":
                    rec = _triplet_from_line(raw, tables)
                elif format == "captions":
                    rec = _caption_from_line(raw, tables)
                else:
                    rec = QAItem.from_dict(raw, refusal_phrases)
            except (UnknownCategory, DuplicateId):
                raise
            except (KeyError, TypeError, ValueError) as e:
                raise MalformedLine(line_no, str(e)) from e
            if rec.id in seen:
                raise DuplicateId(rec.id)
            seen.add(rec.id)
            records.append(rec)
    return records


def dump_corpus(records: Iterable[Any], path: str | Path, format: str) -> int:
    """Write records in the same line schema load_corpus reads; returns the line count."""
    if format not in CORPUS_FORMATS:
        raise ValueError(f"unknown corpus format {format!r}")
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            if format == "triplets":
                d = _triplet_to_line(rec)
            elif format == "captions":
                d = _caption_to_line(rec)
            else:
                d = rec.to_dict()
            fh.write(json.dumps(d, ensure_ascii=False) + "\n")
            n += 1
    return n


def write_jsonl(dicts: Iterable[dict[str, Any]], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for d in dicts:
            fh.write(json.dumps(d, ensure_ascii=False) + "\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise MalformedLine(line_no, f"invalid JSON: {e}") from e
    return out
