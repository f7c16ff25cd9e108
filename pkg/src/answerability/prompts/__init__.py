"""Bundled prompt templates, overridable by a directory of same-named .txt files."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

TEMPLATE_NAMES = (
    "qagen_object",
    "qagen_relation",
    "qagen_attribute",
    "judge_answerable",
    "judge_unanswerable",
    "pope_decompose",
)


def load_prompt(name: str, template_dir: str | Path | None = None) -> str:
    """Return the template text for `name`, preferring `template_dir` overrides."""
    if template_dir is not None:
        override = Path(template_dir) / f"{name}.txt"
        if override.exists():
            return override.read_text(encoding="utf-8")
    ref = resources.files(__package__) / f"{name}.txt"
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled template named {name!r}")
    return ref.read_text(encoding="utf-8")
