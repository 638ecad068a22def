"""Scoring a composed prompt on the development set."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..context.bundle import ContextBundle
from ..core import (
    STATUS_PHASE,
    FailureRecord,
    MethodResult,
    MethodStatus,
    Rule,
    RuleSet,
    ScoreReport,
)
from ..llm_client import LLM, LLMError, Tag
from ..formatting import format_final
from .extract import ExtractionError, extract_test_code
from .harness import Harness
from .normalize import DEFAULT_MAX_LEN, normalize_error

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DevEntry:
    focal_method_id: str
    bundle: ContextBundle


@dataclass(frozen=True)
class DevSet:
    entries: tuple[DevEntry, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("development set is empty")
        ids = [e.focal_method_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate focal method ids in development set")

    @property
    def ids(self) -> list[str]:
        return [e.focal_method_id for e in self.entries]

    def bundle(self, focal_method_id: str) -> ContextBundle:
        for e in self.entries:
            if e.focal_method_id == focal_method_id:
                return e.bundle
        raise KeyError(focal_method_id)

    def subset(self, fraction: float) -> DevSet:
        """Deterministic prefix (by focal id) holding ``fraction`` of the entries."""
        if fraction >= 1:
            return self
        ordered = sorted(self.entries, key=lambda e: e.focal_method_id)
        keep = max(1, round(len(ordered) * fraction))
        return DevSet(tuple(ordered[:keep]))


@dataclass(frozen=True)
class ComposedPrompt:
    """An instruction plus rules; rendered per focal method with its context."""

    prompt_id: str
    instruction: str
    rules: tuple[str, ...] = ()

    @classmethod
    def of(cls, prompt_id: str, instruction: str, rules: RuleSet | Iterable[Rule | str] = ()) -> ComposedPrompt:
        return cls(prompt_id, instruction, tuple(r.text if isinstance(r, Rule) else r for r in rules))

    def render(self, bundle: ContextBundle) -> str:
        return format_final(self.instruction, self.rules, bundle)


class Evaluator:
    """Bundles the LLM, harness and settings that ``evaluate_prompt`` needs."""

    def __init__(self, llm: LLM, harness: Harness, parallelism: int = 1, max_error_len: int = DEFAULT_MAX_LEN):
        self.llm = llm
        self.harness = harness
        self.parallelism = parallelism
        self.max_error_len = max_error_len

    def __call__(self, composed: ComposedPrompt, dev: DevSet) -> ScoreReport:
        return evaluate_prompt(composed, dev, self.llm, self.harness, self.parallelism, self.max_error_len)


def _evaluate_entry(
    composed: ComposedPrompt, entry: DevEntry, llm: LLM, harness: Harness, max_error_len: int
) -> tuple[MethodResult, FailureRecord | None]:
    focal = entry.focal_method_id
    test_source = ""
    try:
        reply = llm.ask(composed.render(entry.bundle), Tag.TEST_GENERATION)
        test_source = extract_test_code(reply)
    except (LLMError, ExtractionError) as exc:
        log.info("%s on %s: %s", composed.prompt_id, focal, exc)
        lines, branches = harness.method_totals(focal)
        status = MethodStatus.LLM_EXTRACTION_FAILURE
        result = MethodResult(focal, status, 0, lines, 0, branches)
        raw = f"{type(exc).__name__}: {exc}"
        return result, FailureRecord(focal, test_source, raw, normalize_error(raw, max_error_len), STATUS_PHASE[status])
    outcome = harness.run(test_source, focal)
    result = MethodResult(
        focal,
        outcome.status,
        outcome.executed_lines,
        outcome.total_lines,
        outcome.executed_branches,
        outcome.total_branches,
    )
    if outcome.status is MethodStatus.PASSED:
        return result, None
    raw = outcome.raw_error or outcome.status.value
    failure = FailureRecord(focal, test_source, raw, normalize_error(raw, max_error_len), STATUS_PHASE[outcome.status])
    return result, failure


def evaluate_prompt(
    composed: ComposedPrompt,
    dev: DevSet,
    llm: LLM,
    harness: Harness,
    parallelism: int = 1,
    max_error_len: int = DEFAULT_MAX_LEN,
) -> ScoreReport:
    """Generate one test per dev entry, run it, and aggregate coverage.

    Entries run concurrently up to ``parallelism``; results are folded in
    focal-id order so the report does not depend on scheduling.
    """
    harness.self_check(dev.ids)
    entries: Sequence[DevEntry] = sorted(dev.entries, key=lambda e: e.focal_method_id)
    if parallelism <= 1:
        outputs = [_evaluate_entry(composed, e, llm, harness, max_error_len) for e in entries]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outputs = list(pool.map(lambda e: _evaluate_entry(composed, e, llm, harness, max_error_len), entries))
    results = [r for r, _ in outputs]
    failures = [f for _, f in outputs if f is not None]
    return ScoreReport.from_results(composed.prompt_id, results, failures)
