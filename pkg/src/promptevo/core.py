"""Domain types shared across the optimizer, plus fitness and top-K selection.

Every type here is a frozen value object. Scores are percentage points
throughout (0-100), including ``Rule.score_delta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence


class MethodStatus(str, Enum):
    PASSED = "passed"
    COMPILE_ERROR = "compile_error"
    RUNTIME_ERROR = "runtime_error"
    ASSERTION_FAILURE = "assertion_failure"
    LLM_EXTRACTION_FAILURE = "llm_extraction_failure"


class FailurePhase(str, Enum):
    COMPILE = "compile"
    RUNTIME = "runtime"
    ASSERTION = "assertion"
    # no test code could be pulled out of the model reply
    GENERATION = "generation"


STATUS_PHASE = {
    MethodStatus.COMPILE_ERROR: FailurePhase.COMPILE,
    MethodStatus.RUNTIME_ERROR: FailurePhase.RUNTIME,
    MethodStatus.ASSERTION_FAILURE: FailurePhase.ASSERTION,
    MethodStatus.LLM_EXTRACTION_FAILURE: FailurePhase.GENERATION,
}


class EmptyEvaluationSet(ValueError):
    pass


@dataclass(frozen=True)
class Origin:
    kind: str  # "seed" | "generated"
    iteration: int = 0
    modification_id: str | None = None

    @classmethod
    def seed(cls) -> Origin:
        return cls("seed")

    @classmethod
    def generated(cls, iteration: int, modification_id: str) -> Origin:
        return cls("generated", iteration, modification_id)

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "seed":
            return {"kind": "seed"}
        return {"kind": self.kind, "iteration": self.iteration, "modification_id": self.modification_id}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Origin:
        if data["kind"] == "seed":
            return cls.seed()
        return cls.generated(int(data["iteration"]), data["modification_id"])


@dataclass(frozen=True)
class Prompt:
    id: str
    instruction: str
    origin: Origin = field(default_factory=Origin.seed)
    parent_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.instruction.strip():
            raise ValueError(f"prompt {self.id!r} has an empty instruction")
        if (self.origin.kind == "seed") != (not self.parent_ids):
            raise ValueError(f"prompt {self.id!r}: parent_ids must be empty iff origin is seed")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "instruction": self.instruction,
            "origin": self.origin.to_dict(),
            "parent_ids": list(self.parent_ids),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Prompt:
        return cls(
            id=data["id"],
            instruction=data["instruction"],
            origin=Origin.from_dict(data["origin"]),
            parent_ids=tuple(data.get("parent_ids", ())),
        )


@dataclass(frozen=True)
class PromptPopulation:
    prompts: tuple[Prompt, ...]
    iteration: int = 0

    def __post_init__(self) -> None:
        ids = [p.id for p in self.prompts]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate prompt ids in population")
        if self.iteration < 0:
            raise ValueError("iteration must be non-negative")

    def __len__(self) -> int:
        return len(self.prompts)

    def __iter__(self):
        return iter(self.prompts)

    def by_id(self, prompt_id: str) -> Prompt:
        for p in self.prompts:
            if p.id == prompt_id:
                return p
        raise KeyError(prompt_id)


@dataclass(frozen=True)
class Rule:
    id: str
    text: str
    source_cluster_id: str | None = None
    score_delta: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text,
            "source_cluster_id": self.source_cluster_id,
            "score_delta": self.score_delta,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Rule:
        return cls(data["id"], data["text"], data.get("source_cluster_id"), float(data.get("score_delta", 0.0)))


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...] = ()

    def __post_init__(self) -> None:
        for r in self.rules:
            if not r.score_delta > 0:
                raise ValueError(f"rule {r.id!r} has non-positive score_delta {r.score_delta}")

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    @property
    def texts(self) -> tuple[str, ...]:
        return tuple(r.text for r in self.rules)

    def with_rule(self, rule: Rule) -> RuleSet:
        return RuleSet(self.rules + (rule,))


@dataclass(frozen=True)
class FailureRecord:
    focal_method_id: str
    test_source: str
    raw_error: str
    normalized_error: str
    phase: FailurePhase

    def to_dict(self) -> dict[str, Any]:
        return {
            "focal_method_id": self.focal_method_id,
            "test_source": self.test_source,
            "raw_error": self.raw_error,
            "normalized_error": self.normalized_error,
            "phase": self.phase.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> FailureRecord:
        return cls(
            data["focal_method_id"],
            data["test_source"],
            data["raw_error"],
            data["normalized_error"],
            FailurePhase(data["phase"]),
        )


@dataclass(frozen=True)
class MethodResult:
    focal_method_id: str
    status: MethodStatus
    executed_lines: int = 0
    total_lines: int = 0
    executed_branches: int = 0
    total_branches: int = 0

    def __post_init__(self) -> None:
        counts = (self.executed_lines, self.total_lines, self.executed_branches, self.total_branches)
        if min(counts) < 0:
            raise ValueError("coverage counts must be non-negative")
        if self.executed_lines > self.total_lines or self.executed_branches > self.total_branches:
            raise ValueError(f"{self.focal_method_id}: executed count exceeds total")
        # totals are kept for failures so they still weigh in the denominator
        if self.status is not MethodStatus.PASSED and (self.executed_lines or self.executed_branches):
            raise ValueError(f"{self.focal_method_id}: non-passed result cannot cover anything")

    def to_dict(self) -> dict[str, Any]:
        return {
            "focal_method_id": self.focal_method_id,
            "status": self.status.value,
            "executed_lines": self.executed_lines,
            "total_lines": self.total_lines,
            "executed_branches": self.executed_branches,
            "total_branches": self.total_branches,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> MethodResult:
        return cls(
            data["focal_method_id"],
            MethodStatus(data["status"]),
            int(data["executed_lines"]),
            int(data["total_lines"]),
            int(data["executed_branches"]),
            int(data["total_branches"]),
        )


@dataclass(frozen=True)
class ScoreReport:
    prompt_id: str
    line_coverage: float
    branch_coverage: float
    per_method: tuple[MethodResult, ...]
    failures: tuple[FailureRecord, ...] = ()

    @classmethod
    def from_results(
        cls, prompt_id: str, results: Iterable[MethodResult], failures: Iterable[FailureRecord] = ()
    ) -> ScoreReport:
        results = tuple(sorted(results, key=lambda r: r.focal_method_id))
        lc, bc = aggregate_coverage(results)
        return cls(prompt_id, lc, bc, results, tuple(failures))

    @property
    def fitness(self) -> float:
        return fitness(self)

    def to_dict(self) -> dict[str, Any]:
        return {
            "prompt_id": self.prompt_id,
            "line_coverage": self.line_coverage,
            "branch_coverage": self.branch_coverage,
            "per_method": [m.to_dict() for m in self.per_method],
            "failures": [f.to_dict() for f in self.failures],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ScoreReport:
        return cls(
            data["prompt_id"],
            float(data["line_coverage"]),
            float(data["branch_coverage"]),
            tuple(MethodResult.from_dict(m) for m in data["per_method"]),
            tuple(FailureRecord.from_dict(f) for f in data.get("failures", ())),
        )


def fitness(report: ScoreReport) -> float:
    """Mean of line and branch coverage, in percentage points."""
    return (report.line_coverage + report.branch_coverage) / 2


def aggregate_coverage(results: Sequence[MethodResult]) -> tuple[float, float]:
    """Micro-averaged (line, branch) coverage over a set of method results.

    Counters are summed before dividing, so the result for a set equals the
    result for any partition of it recombined. Methods without branches add
    nothing to the branch denominator; if no method has branches the branch
    coverage is 0.0.
    """
    if not results or sum(r.total_lines for r in results) == 0:
        raise EmptyEvaluationSet("empty evaluation set")
    lines = sum(r.executed_lines for r in results)
    total_lines = sum(r.total_lines for r in results)
    branches = sum(r.executed_branches for r in results)
    total_branches = sum(r.total_branches for r in results)
    lc = 100.0 * lines / total_lines
    bc = 100.0 * branches / total_branches if total_branches else 0.0
    return lc, bc


def select_top(population: PromptPopulation | Sequence[Prompt], scores: Mapping[str, float], k: int) -> list[Prompt]:
    """Return the ``k`` best prompts, best first.

    Ties go to the prompt from the earlier iteration (seeds count as 0), then
    to the lexicographically smaller id, so the result does not depend on the
    order of the input list.
    """
    prompts = list(population)
    if k < 1:
        raise ValueError("k must be positive")
    if k > len(prompts):
        raise ValueError(f"k={k} exceeds population size {len(prompts)}")
    missing = [p.id for p in prompts if p.id not in scores]
    if missing:
        raise KeyError(f"no score for prompts {missing}")
    ranked = sorted(prompts, key=lambda p: (-scores[p.id], p.origin.iteration, p.id))
    return ranked[:k]
