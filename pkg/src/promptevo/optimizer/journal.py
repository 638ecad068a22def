"""Append-only JSON Lines run journal.

Record kinds, one JSON object per line, keyed by ``"event"``:

``start``
    ``config`` (algorithm settings), ``seeds`` (prompt dicts), ``dev_set``
    (focal ids).
``iteration``
    ``iteration``; ``evaluated`` (per prompt: prompt, fitness, report);
    ``best_fitness``/``mean_fitness``; ``selected`` ids;
    ``modification_methods``; ``new_prompts``; ``population`` after the
    step; ``induction`` (clusters, weights, sampled cluster, candidates with
    validation scores, accepted rule, handled addition); the full ``rules``
    and ``handled`` lists; ``rng_draws``; ``llm_cursor``.
``final``
    ``evaluated``, ``best_fitness``, ``mean_fitness``, ``artifact``,
    ``llm_cursor``.

Every record is serialized the same way on every run, so two runs with the
same inputs write byte-identical journals.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

log = logging.getLogger(__name__)


def dumps(record: dict[str, Any]) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


class RunJournal:
    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, record: dict[str, Any]) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(dumps(record) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def reset(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("", encoding="utf-8")

    def load(self) -> JournalContents:
        return read_journal(self.path)

    def truncate(self, size: int) -> None:
        with self.path.open("r+b") as fh:
            fh.truncate(size)


@dataclass
class JournalContents:
    records: list[dict[str, Any]] = field(default_factory=list)
    valid_bytes: int = 0
    dropped_tail: bool = False

    def of_kind(self, event: str) -> list[dict[str, Any]]:
        return [r for r in self.records if r.get("event") == event]


def read_journal(path: str | Path) -> JournalContents:
    """Parse a journal, ignoring an unterminated or unparsable last line.

    A bad line anywhere else means the file was not written by us and is
    reported as an error.
    """
    data = Path(path).read_bytes()
    out = JournalContents()
    offset = 0
    lines = data.split(b"\n")
    for i, raw in enumerate(lines):
        last = i == len(lines) - 1
        if last and not raw:
            break
        end = offset + len(raw) + (0 if last else 1)
        try:
            if last:
                raise ValueError("missing newline")
            record = json.loads(raw.decode("utf-8"))
            if not isinstance(record, dict) or "event" not in record:
                raise ValueError("not a journal record")
        except ValueError as exc:
            if last or all(not rest.strip() for rest in lines[i + 1 :]):
                log.warning("ignoring partial journal line %d: %s", i + 1, exc)
                out.dropped_tail = True
                break
            raise ValueError(f"{path}:{i + 1}: corrupt journal line: {exc}") from exc
        out.records.append(record)
        offset = end
        out.valid_bytes = offset
    return out
