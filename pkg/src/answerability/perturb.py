"""Single-element, category-constrained alteration of scene descriptions.

A triplet alteration swaps one of {source object, relation, target object} for a
different member of the same category; a caption alteration swaps one categorized
adjective span. Each item gets its own RNG stream derived from (global seed,
item id), so parallel generation order never changes the output.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Protocol

from .corpus import (
    ATTRIBUTE,
    OBJECT,
    RELATION,
    AdjectiveSpan,
    CaptionDescription,
    CategorizedLabel,
    CategoryTable,
    Description,
    DescriptionRecord,
    TableSet,
    TripletDescription,
    VideoRef,
    description_from_dict,
)
from .errors import NoEligibleSite, SingletonCategory

TRIPLET_SITES = ("source_object", "relation", "target_object")
UNCATEGORIZED = "Uncategorized"

# triplet element -> table kind that constrains its replacements
_SITE_TABLE = {"source_object": OBJECT, "target_object": OBJECT, "relation": RELATION}


@dataclass(frozen=True)
class Alteration:
    """The single change applied: which element, what it was, what it became."""

    kind: str  # source_object | relation | target_object | attribute
    original: str
    replacement: str
    category: str
    span: tuple[int, int] | None = None  # byte range in the altered caption

    def __post_init__(self) -> None:
        if self.original.lower() == self.replacement.lower():
            raise ValueError("replacement must differ from the original")

    def unanswerability_kind(self) -> str:
        if self.kind in ("source_object", "target_object"):
            return OBJECT
        if self.kind == "relation":
            return RELATION
        return ATTRIBUTE

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "kind": self.kind,
            "original": self.original,
            "replacement": self.replacement,
            "category": self.category,
        }
        if self.span is not None:
            d["span"] = list(self.span)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Alteration":
        span = d.get("span")
        return cls(
            kind=d["kind"],
            original=d["original"],
            replacement=d["replacement"],
            category=d["category"],
            span=tuple(span) if span else None,
        )


@dataclass(frozen=True)
class AlteredDescription:
    """An altered description paired with the alteration that produced it."""

    base_id: str
    altered: Description
    alteration: Alteration
    video: VideoRef | None = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "base_id": self.base_id,
            "altered": self.altered.to_dict(),
            "alteration": self.alteration.to_dict(),
        }
        if self.video is not None:
            d["video"] = self.video.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "AlteredDescription":
        video = d.get("video")
        return cls(
            base_id=d["base_id"],
            altered=description_from_dict(d["altered"]),
            alteration=Alteration.from_dict(d["alteration"]),
            video=VideoRef.from_dict(video) if video else None,
        )


@dataclass(frozen=True)
class Site:
    """An eligible alteration site: a triplet element or a caption span index."""

    kind: str
    span_index: int | None = None


def derive_rng(global_seed: int, item_id: str) -> random.Random:
    """Order-independent per-item stream: hash(global seed, item id) seeds the RNG."""
    digest = hashlib.sha256(f"{global_seed}:{item_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _span_original(span: AdjectiveSpan, table: CategoryTable) -> str | None:
    """Member label this span alters, or None if the span is not alterable."""
    members = table.members(span.category)
    lower = span.surface.lower()
    for m in members:
        if m.lower() == lower:
            return m
    # Unknown adjectives route to Uncategorized and keep their surface form.
    if span.category == UNCATEGORIZED:
        return span.surface
    return None


def eligible_sites(d: Description, tables: TableSet) -> list[Site]:
    sites: list[Site] = []
    if isinstance(d, TripletDescription):
        for name in TRIPLET_SITES:
            table = tables.get(_SITE_TABLE[name])
            if len(table.members(d.element(name).category)) >= 2:
                sites.append(Site(kind=name))
    else:
        table = tables.get(ATTRIBUTE)
        for i, span in enumerate(d.adjective_spans):
            if span.category not in table.categories:
                continue
            if len(table.members(span.category)) < 2:
                continue
            if _span_original(span, table) is None:
                continue
            sites.append(Site(kind=ATTRIBUTE, span_index=i))
    return sites


def select_site(d: Description, tables: TableSet, rng: random.Random) -> Site:
    """Pick one eligible site uniformly; deterministic given the derived RNG."""
    sites = eligible_sites(d, tables)
    if not sites:
        raise NoEligibleSite("description has no alterable element")
    return sites[rng.randrange(len(sites))]


_SUFFIX_RULES = (
    ("ies", "y"),
    ("ing", ""),
    ("ed", ""),
    ("est", ""),
    ("er", ""),
    ("s", ""),
)


def _lemma(word: str, lemmas: Mapping[str, str] | None = None) -> str:
    """Cheap lemma guess: configured map first, then common English suffixes."""
    w = word.lower()
    if lemmas and w in lemmas:
        return lemmas[w].lower()
    for suffix, repl in _SUFFIX_RULES:
        if w.endswith(suffix) and len(w) - len(suffix) >= 3:
            stem = w[: -len(suffix)] + repl
            # undo consonant doubling: "sitting" -> "sitt" -> "sit"
            if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in "aeiouls":
                stem = stem[:-1]
            return stem
    return w


def lexical_guard(
    original: str,
    replacement: str,
    synonyms: Mapping[str, Iterable[str]] | None = None,
    lemmas: Mapping[str, str] | None = None,
) -> bool:
    """False when the replacement is lexically too close to the original.

    Rejects case-insensitive equality, configured synonym pairs (checked both
    directions), and shared lemmas.
    """
    a, b = original.lower().strip(), replacement.lower().strip()
    if a == b:
        return False
    if synonyms:
        if b in {s.lower() for s in synonyms.get(a, ())}:
            return False
        if a in {s.lower() for s in synonyms.get(b, ())}:
            return False
    if _lemma(a, lemmas) == _lemma(b, lemmas):
        return False
    return True


def _sample_replacement(
    original: str,
    category: str,
    table: CategoryTable,
    rng: random.Random,
    synonyms: Mapping[str, Iterable[str]] | None,
) -> str:
    members = table.members(category)
    if len(members) < 2:
        raise SingletonCategory(category)
    if synonyms is None:
        candidates = [m for m in members if m.lower() != original.lower()]
    else:
        candidates = [
            m for m in members if m.lower() != original.lower() and lexical_guard(original, m, synonyms)
        ]
    if not candidates:
        raise NoEligibleSite(f"no admissible replacement for {original!r} in {category!r}")
    return candidates[rng.randrange(len(candidates))]


def _alter_triplet(
    d: TripletDescription,
    site: Site,
    tables: TableSet,
    rng: random.Random,
    synonyms: Mapping[str, Iterable[str]] | None,
) -> tuple[TripletDescription, Alteration]:
    element = d.element(site.kind)
    table = tables.get(_SITE_TABLE[site.kind])
    replacement = _sample_replacement(element.label, element.category, table, rng, synonyms)
    new_element = CategorizedLabel(label=replacement, category=element.category)
    altered = TripletDescription(
        source_object=new_element if site.kind == "source_object" else d.source_object,
        relation=new_element if site.kind == "relation" else d.relation,
        target_object=new_element if site.kind == "target_object" else d.target_object,
    )
    alteration = Alteration(
        kind=site.kind,
        original=element.label,
        replacement=replacement,
        category=element.category,
    )
    return altered, alteration


def _alter_caption(
    d: CaptionDescription,
    site: Site,
    tables: TableSet,
    rng: random.Random,
    synonyms: Mapping[str, Iterable[str]] | None,
) -> tuple[CaptionDescription, Alteration]:
    if site.span_index is None or site.span_index >= len(d.adjective_spans):
        raise NoEligibleSite(f"caption has no span index {site.span_index}")
    span = d.adjective_spans[site.span_index]
    table = tables.get(ATTRIBUTE)
    original = _span_original(span, table)
    if original is None:
        raise NoEligibleSite(f"span {span.surface!r} is not a member of {span.category!r}")
    replacement = _sample_replacement(original, span.category, table, rng, synonyms)

    raw = d.text.encode("utf-8")
    repl_bytes = replacement.encode("utf-8")
    new_raw = raw[: span.start] + repl_bytes + raw[span.end :]
    delta = len(repl_bytes) - (span.end - span.start)
    new_spans = []
    for i, s in enumerate(d.adjective_spans):
        if i == site.span_index:
            new_spans.append(
                AdjectiveSpan(
                    start=s.start,
                    end=s.start + len(repl_bytes),
                    surface=replacement,
                    category=s.category,
                )
            )
        elif s.start >= span.end:
            new_spans.append(AdjectiveSpan(s.start + delta, s.end + delta, s.surface, s.category))
        else:
            new_spans.append(s)
    altered = CaptionDescription(text=new_raw.decode("utf-8"), adjective_spans=tuple(new_spans))
    alteration = Alteration(
        kind=ATTRIBUTE,
        original=original,
        replacement=replacement,
        category=span.category,
        span=(span.start, span.start + len(repl_bytes)),
    )
    return altered, alteration


def alter(
    rec: DescriptionRecord,
    site: Site,
    tables: TableSet,
    rng: random.Random,
    synonyms: Mapping[str, Iterable[str]] | None = None,
) -> AlteredDescription:
    """Replace exactly the element at `site` with a different same-category member."""
    if isinstance(rec.body, TripletDescription):
        if site.kind not in TRIPLET_SITES:
            raise NoEligibleSite(f"{site.kind!r} is not a triplet site")
        altered, alteration = _alter_triplet(rec.body, site, tables, rng, synonyms)
    else:
        altered, alteration = _alter_caption(rec.body, site, tables, rng, synonyms)
    return AlteredDescription(
        base_id=rec.id, altered=altered, alteration=alteration, video=rec.video
    )


class AdjectiveTagger(Protocol):
    """Pluggable POS-style tagger filling adjective spans for untagged captions."""

    def tag(self, text: str) -> tuple[AdjectiveSpan, ...]: ...


_TOKEN = re.compile(r"[A-Za-z][A-Za-z-]*")


class LexiconTagger:
    """Offline fallback tagger: closed-lexicon lookup against the attribute table."""

    def __init__(self, table: CategoryTable, lemmas: Mapping[str, str] | None = None):
        self.table = table
        self.lemmas = dict(lemmas or {})

    def tag(self, text: str) -> tuple[AdjectiveSpan, ...]:
        spans = []
        for m in _TOKEN.finditer(text):
            token = m.group(0)
            lemma = self.lemmas.get(token.lower(), token.lower())
            category = self.table.category_of(lemma)
            if category is None:
                continue
            start = len(text[: m.start()].encode("utf-8"))
            end = start + len(token.encode("utf-8"))
            spans.append(AdjectiveSpan(start=start, end=end, surface=token, category=category))
        return tuple(spans)


def tag_caption(rec: DescriptionRecord, tagger: AdjectiveTagger) -> DescriptionRecord:
    """Fill adjective spans on an untagged caption record; tagged records pass through."""
    body = rec.body
    if not isinstance(body, CaptionDescription) or body.adjective_spans:
        return rec
    spans = tagger.tag(body.text)
    return DescriptionRecord(
        id=rec.id,
        body=CaptionDescription(text=body.text, adjective_spans=spans),
        video=rec.video,
    )


def perturb_record(
    rec: DescriptionRecord,
    tables: TableSet,
    global_seed: int,
    per_description: int = 1,
    synonyms: Mapping[str, Iterable[str]] | None = None,
    tagger: AdjectiveTagger | None = None,
) -> list[AlteredDescription]:
    """Derive `per_description` independent alterations of one record.

    The n-th output uses the RNG stream keyed by "<id>#<n>", so outputs are
    stable under reordering and parallelism.
    """
    if tagger is not None:
        rec = tag_caption(rec, tagger)
    out = []
    for n in range(per_description):
        rng = derive_rng(global_seed, f"{rec.id}#{n}")
        site = select_site(rec.body, tables, rng)
        out.append(alter(rec, site, tables, rng, synonyms))
    return out


def perturb_corpus(
    records: Iterable[DescriptionRecord],
    tables: TableSet,
    global_seed: int,
    per_description: int = 1,
    synonyms: Mapping[str, Iterable[str]] | None = None,
    tagger: AdjectiveTagger | None = None,
    skip_ineligible: bool = True,
) -> list[AlteredDescription]:
    out: list[AlteredDescription] = []
    for rec in records:
        try:
            out.extend(
                perturb_record(rec, tables, global_seed, per_description, synonyms, tagger)
            )
        except NoEligibleSite:
            if not skip_ineligible:
                raise
    return out


def load_synonyms(path: str) -> dict[str, tuple[str, ...]]:
    """Load a JSON map of word -> list of synonyms."""
    import json

    raw = json.loads(open(path, encoding="utf-8").read())
    return {k.lower(): tuple(v) for k, v in raw.items()}
