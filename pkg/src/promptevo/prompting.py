"""Prompt templates and parsing helpers for model replies."""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path
from typing import Mapping

TEMPLATE_NAMES = ("modification", "synthesis", "reflection", "transformation")


class Templates:
    """Plain-text templates with ``{NAME}`` placeholders.

    Files in ``override_dir`` named ``<template>.txt`` replace the bundled
    ones; anything missing falls back to the package copy.
    """

    def __init__(self, override_dir: str | Path | None = None):
        self.override_dir = Path(override_dir) if override_dir else None
        self._cache: dict[str, str] = {}

    def text(self, name: str) -> str:
        if name not in self._cache:
            path = self.override_dir / f"{name}.txt" if self.override_dir else None
            if path is not None and path.is_file():
                self._cache[name] = path.read_text(encoding="utf-8")
            else:
                self._cache[name] = resources.files("promptevo").joinpath(f"templates/{name}.txt").read_text(encoding="utf-8")
        return self._cache[name]

    def fill(self, name: str, values: Mapping[str, object]) -> str:
        return fill(self.text(name), values)

    def fallback_directives(self) -> list[str]:
        lines = self.text("fallback_directives").splitlines()
        return [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]


def fill(template: str, values: Mapping[str, object]) -> str:
    # single pass so placeholder-like text inside values is left alone
    pattern = re.compile(r"\{(" + "|".join(re.escape(k) for k in values) + r")\}") if values else None
    if pattern is None:
        return template
    return pattern.sub(lambda m: str(values[m.group(1)]), template)


_ITEM = re.compile(r"(?:^|(?<=\s))(\d{1,2})[.)]\s+", re.MULTILINE)


def parse_numbered_list(text: str) -> list[str]:
    """Items of a ``1. ... 2. ...`` list, on separate lines or run together.

    Only markers continuing the sequence 1, 2, 3... start a new item, so a
    stray "3." inside an item does not split it.
    """
    items: list[str] = []
    starts: list[tuple[int, int]] = []
    expected = 1
    for m in _ITEM.finditer(text):
        if int(m.group(1)) == expected:
            starts.append((m.start(), m.end()))
            expected += 1
    for k, (_, body_start) in enumerate(starts):
        end = starts[k + 1][0] if k + 1 < len(starts) else len(text)
        chunk = text[body_start:end]
        if k + 1 == len(starts):
            # a blank line ends the final item
            chunk = re.split(r"\n\s*\n", chunk, maxsplit=1)[0]
        item = " ".join(chunk.split()).strip()
        item = re.sub(r"^\*\*(.+?)\*\*:?\s*", r"\1: ", item).strip().rstrip(":").strip()
        if item:
            items.append(item)
    return items


_QUOTES = [('"', '"'), ("'", "'"), ("“", "”"), ("`", "`")]


def clean_instruction(reply: str) -> str:
    """Strip fences, labels, emphasis and surrounding quotes from a one-instruction reply."""
    text = reply.strip()
    fenced = re.search(r"```[^\n`]*\n(.*?)```", text, re.DOTALL)
    if fenced:
        text = fenced.group(1).strip()
    text = re.sub(r"^(new|improved|modified)?\s*(prompt|instruction)\s*:\s*", "", text, flags=re.IGNORECASE)
    text = re.sub(r"^\*\*(.*)\*\*$", r"\1", text, flags=re.DOTALL).strip()
    changed = True
    while changed and len(text) >= 2:
        changed = False
        for open_, close in _QUOTES:
            if text.startswith(open_) and text.endswith(close):
                text = text[1:-1].strip()
                changed = True
    return text
