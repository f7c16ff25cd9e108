"""Refusal-indicator lexicon and matching shared by corpus validation and judging."""

from __future__ import annotations

import re
from pathlib import Path

DEFAULT_REFUSAL_PHRASES: tuple[str, ...] = (
    "unanswerable",
    "cannot be answered",
    "not answerable",
    "cannot answer this question",
    "is not possible to answer",
)

_WS = re.compile(r"\s+")


def normalize_ws(text: str) -> str:
    """Lowercase and collapse runs of whitespace to single spaces."""
    return _WS.sub(" ", text.lower()).strip()


def contains_refusal(text: str, phrases: tuple[str, ...] = DEFAULT_REFUSAL_PHRASES) -> bool:
    """True iff any lexicon phrase occurs in text, case-insensitive, whitespace-normalized."""
    if not phrases:
        raise ValueError("refusal lexicon is empty")
    hay = normalize_ws(text)
    return any(normalize_ws(p) in hay for p in phrases)


def load_lexicon(path: str | Path) -> tuple[str, ...]:
    """Load one phrase per line; blank lines and #-comments ignored."""
    phrases = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            phrases.append(line)
    if not phrases:
        raise ValueError(f"lexicon file {path} contains no phrases")
    return tuple(phrases)
