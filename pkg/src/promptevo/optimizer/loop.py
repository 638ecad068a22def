"""The optimization loop: evaluate, diversify, induce rules, repeat."""

from __future__ import annotations

import logging
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Any, Callable, Mapping, Sequence

from ..core import FailureRecord, Origin, Prompt, PromptPopulation, Rule, RuleSet, ScoreReport, select_top
from ..diversity import step
from ..evaluator.evaluate import ComposedPrompt, DevSet
from ..formatting import FinalPromptArtifact
from ..llm_client import LLM
from ..prompting import Templates
from ..rule_induction.induction import induce_rule
from .journal import RunJournal, read_journal

log = logging.getLogger(__name__)

EvaluateFn = Callable[[ComposedPrompt, DevSet], ScoreReport]

# settings that may differ between a run and its resumption
_RUNTIME_ONLY = ("parallelism", "template_dir")


class ResumeError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    seed_count: int = 5
    new_prompts_per_iteration: int = 2
    max_iterations: int = 5
    eps: float = 0.3
    min_pts: int = 2
    reflection_k: int = 3
    parallelism: int = 1
    rng_seed: int = 0
    template_dir: str | None = None
    max_subclasses: int = 8
    max_argument_types: int = 6
    distinctness_threshold: float = 0.3
    validation_fraction: float = 1.0

    def __post_init__(self) -> None:
        if not 1 <= self.new_prompts_per_iteration < self.seed_count:
            raise ValueError("need 1 <= new_prompts_per_iteration < seed_count")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0 < self.eps <= 1:
            raise ValueError("eps must lie in (0, 1]")
        if self.min_pts < 1 or self.reflection_k < 1 or self.parallelism < 1:
            raise ValueError("min_pts, reflection_k and parallelism must be >= 1")
        if not 0 < self.validation_fraction <= 1:
            raise ValueError("validation_fraction must lie in (0, 1]")

    def journal_dict(self) -> dict[str, Any]:
        return {k: v for k, v in asdict(self).items() if k not in _RUNTIME_ONLY}


class CountingRandom(random.Random):
    """``random.Random`` that counts ``random()`` calls so a run can fast-forward."""

    def __init__(self, seed: int):
        self.draws = 0
        super().__init__(seed)

    def random(self) -> float:
        self.draws += 1
        return super().random()

    def skip(self, draws: int) -> None:
        for _ in range(draws):
            self.random()


@dataclass
class RunState:
    iteration: int
    population: PromptPopulation
    rules: RuleSet
    handled: list[FailureRecord]
    rng: CountingRandom


@dataclass
class RunResult:
    artifact: FinalPromptArtifact
    population: PromptPopulation
    rules: RuleSet
    handled: list[FailureRecord]
    records: list[dict[str, Any]] = field(default_factory=list)

    @property
    def history(self) -> list[tuple[str, float, float]]:
        """(label, best fitness, mean fitness) per evaluation pass."""
        rows = []
        for rec in self.records:
            if rec["event"] == "iteration":
                rows.append((f"iteration {rec['iteration']}", rec["best_fitness"], rec["mean_fitness"]))
            elif rec["event"] == "final":
                rows.append(("final", rec["best_fitness"], rec["mean_fitness"]))
        return rows


def make_seeds(texts: Sequence[str | Prompt]) -> list[Prompt]:
    out = []
    for i, t in enumerate(texts):
        out.append(t if isinstance(t, Prompt) else Prompt(f"s{i}", t.strip(), Origin.seed()))
    return out


class _Sink:
    def __init__(self, journal: RunJournal | None, records: list[dict[str, Any]] | None = None):
        self.journal = journal
        self.records = list(records or [])

    def write(self, record: dict[str, Any]) -> None:
        if self.journal is not None:
            self.journal.append(record)
        self.records.append(record)


class Optimizer:
    def __init__(
        self,
        config: OptimizerConfig,
        dev: DevSet,
        llm: LLM,
        evaluate: EvaluateFn,
        templates: Templates | None = None,
        focal_sources: Mapping[str, str] | None = None,
    ):
        self.config = config
        self.dev = dev
        self.llm = llm
        self.evaluate = evaluate
        self.templates = templates or Templates(config.template_dir)
        self.focal_sources = focal_sources

    def _focal_sources(self) -> dict[str, str]:
        return {e.focal_method_id: e.bundle.focal_method_source for e in self.dev.entries}

    # -- evaluation ----------------------------------------------------

    def evaluate_population(
        self, population: PromptPopulation, rules: RuleSet
    ) -> tuple[dict[str, float], dict[str, ScoreReport], list[dict[str, Any]]]:
        scores: dict[str, float] = {}
        reports: dict[str, ScoreReport] = {}
        rows = []
        for p in population:
            report = self.evaluate(ComposedPrompt.of(p.id, p.instruction, rules), self.dev)
            reports[p.id] = report
            scores[p.id] = report.fitness
            rows.append({"prompt": p.to_dict(), "fitness": report.fitness, "report": report.to_dict()})
        return scores, reports, rows

    # -- one iteration -------------------------------------------------

    def iterate(self, state: RunState, sink: _Sink) -> RunState:
        cfg = self.config
        t = state.iteration + 1
        scores, reports, rows = self.evaluate_population(state.population, state.rules)
        stepped = step(
            state.population,
            scores,
            cfg.new_prompts_per_iteration,
            self.llm,
            t,
            self.templates,
            cfg.parallelism,
            cfg.distinctness_threshold,
        )
        selected = stepped.selected
        failures = [f for p in selected for f in reports[p.id].failures]
        best = selected[0]
        # the iteration's own score of the best prompt is the baseline unless
        # validation runs on a smaller sample
        validation_dev = self.dev.subset(cfg.validation_fraction)
        baseline = scores[best.id] if validation_dev is self.dev else None
        induction = induce_rule(
            failures,
            state.handled,
            best,
            state.rules,
            validation_dev,
            self.evaluate,
            self.llm,
            state.rng,
            iteration=t,
            eps=cfg.eps,
            min_pts=cfg.min_pts,
            reflection_k=cfg.reflection_k,
            baseline=baseline,
            templates=self.templates,
            focal_sources=self.focal_sources or self._focal_sources(),
        )
        rules = state.rules.with_rule(induction.accepted) if induction.accepted else state.rules
        handled = list(state.handled)
        if induction.handled_added is not None:
            handled.append(induction.handled_added)
        fit = [scores[p.id] for p in state.population]
        log.info("iteration %d: best %.4f, mean %.4f, rules %d", t, max(fit), fmean(fit), len(rules))
        sink.write(
            {
                "event": "iteration",
                "iteration": t,
                "evaluated": rows,
                "best_fitness": max(fit),
                "mean_fitness": fmean(fit),
                "selected": [p.id for p in selected],
                "modification_methods": [m.to_dict() for m in stepped.methods],
                "new_prompts": [p.to_dict() for p in stepped.new_prompts],
                "population": [p.to_dict() for p in stepped.population],
                "induction": induction.to_dict(),
                "rules": [r.to_dict() for r in rules],
                "handled": [h.to_dict() for h in handled],
                "rng_draws": state.rng.draws,
                "llm_cursor": self.llm.backend.cursor(),
            }
        )
        return RunState(t, stepped.population, rules, handled, state.rng)

    def finish(self, state: RunState, sink: _Sink) -> RunResult:
        # prompts born in the last iteration have no score yet
        scores, _, rows = self.evaluate_population(state.population, state.rules)
        best = select_top(state.population, scores, 1)[0]
        artifact = FinalPromptArtifact.build(best, state.rules, scores[best.id])
        fit = list(scores.values())
        sink.write(
            {
                "event": "final",
                "evaluated": rows,
                "best_fitness": max(fit),
                "mean_fitness": fmean(fit),
                "artifact": artifact.to_dict(),
                "llm_cursor": self.llm.backend.cursor(),
            }
        )
        return RunResult(artifact, state.population, state.rules, state.handled, sink.records)

    def loop(self, state: RunState, sink: _Sink) -> RunResult:
        while state.iteration < self.config.max_iterations:
            state = self.iterate(state, sink)
        return self.finish(state, sink)

    # -- entry points --------------------------------------------------

    def start_record(self, seeds: Sequence[Prompt]) -> dict[str, Any]:
        return {
            "event": "start",
            "config": self.config.journal_dict(),
            "seeds": [s.to_dict() for s in seeds],
            "dev_set": self.dev.ids,
        }

    def run(self, seeds: Sequence[Prompt | str], journal: RunJournal | str | Path | None = None) -> RunResult:
        seeds = make_seeds(seeds)
        check_seeds(seeds, self.config.seed_count)
        if journal is not None and not isinstance(journal, RunJournal):
            journal = RunJournal(journal)
        if journal is not None:
            journal.reset()
        sink = _Sink(journal)
        sink.write(self.start_record(seeds))
        state = RunState(0, PromptPopulation(tuple(seeds), 0), RuleSet(), [], CountingRandom(self.config.rng_seed))
        return self.loop(state, sink)

    def resume(self, seeds: Sequence[Prompt | str], journal: RunJournal | str | Path) -> RunResult:
        """Continue the run recorded in ``journal`` from its last complete iteration."""
        journal = journal if isinstance(journal, RunJournal) else RunJournal(journal)
        seeds = make_seeds(seeds)
        check_seeds(seeds, self.config.seed_count)
        if not journal.path.exists():
            return self.run(seeds, journal)
        contents = read_journal(journal.path)
        if not contents.records:
            return self.run(seeds, journal)
        if contents.dropped_tail:
            journal.truncate(contents.valid_bytes)
        first = contents.records[0]
        expected = self.start_record(seeds)
        if first.get("event") != "start":
            raise ResumeError("journal does not begin with a start record")
        for key in ("config", "seeds", "dev_set"):
            if first.get(key) != expected[key]:
                raise ResumeError(f"journal {key} differs from the current run settings")
        sink = _Sink(journal, contents.records)
        finals = contents.of_kind("final")
        iterations = contents.of_kind("iteration")
        if finals:
            last = iterations[-1] if iterations else None
            return RunResult(
                FinalPromptArtifact.from_dict(finals[-1]["artifact"]),
                PromptPopulation(tuple(Prompt.from_dict(p) for p in last["population"]), last["iteration"])
                if last
                else PromptPopulation(tuple(seeds), 0),
                RuleSet(tuple(Rule.from_dict(r) for r in last["rules"])) if last else RuleSet(),
                [FailureRecord.from_dict(h) for h in last["handled"]] if last else [],
                sink.records,
            )
        rng = CountingRandom(self.config.rng_seed)
        if not iterations:
            state = RunState(0, PromptPopulation(tuple(seeds), 0), RuleSet(), [], rng)
            cursor: dict[str, dict[str, int]] = {"by_tag": {}, "by_hash": {}}
        else:
            last = iterations[-1]
            rng.skip(int(last["rng_draws"]))
            state = RunState(
                int(last["iteration"]),
                PromptPopulation(tuple(Prompt.from_dict(p) for p in last["population"]), int(last["iteration"])),
                RuleSet(tuple(Rule.from_dict(r) for r in last["rules"])),
                [FailureRecord.from_dict(h) for h in last["handled"]],
                rng,
            )
            cursor = last["llm_cursor"]
        backend = self.llm.backend
        check = getattr(backend, "check_cursor", None)
        if check is not None:
            problems = check(cursor)
            if problems:
                raise ResumeError("journal and cassette disagree: " + "; ".join(problems))
        backend.restore_cursor(cursor)
        log.info("resuming after iteration %d", state.iteration)
        return self.loop(state, sink)


def check_seeds(seeds: Sequence[Prompt], seed_count: int) -> None:
    if len(seeds) != seed_count:
        raise ValueError(f"expected {seed_count} seed prompts, got {len(seeds)}")
    texts = [s.instruction.strip() for s in seeds]
    if len(set(texts)) != len(texts):
        raise ValueError("seed prompts must be distinct")
    ids = [s.id for s in seeds]
    if len(set(ids)) != len(ids):
        raise ValueError("seed prompt ids must be distinct")


def run(
    config: OptimizerConfig,
    seeds: Sequence[Prompt | str],
    dev: DevSet,
    llm: LLM,
    evaluate: EvaluateFn,
    journal: RunJournal | str | Path | None = None,
    **kwargs: Any,
) -> RunResult:
    return Optimizer(config, dev, llm, evaluate, **kwargs).run(seeds, journal)


def resume(
    journal: RunJournal | str | Path,
    config: OptimizerConfig,
    seeds: Sequence[Prompt | str],
    dev: DevSet,
    llm: LLM,
    evaluate: EvaluateFn,
    **kwargs: Any,
) -> RunResult:
    return Optimizer(config, dev, llm, evaluate, **kwargs).resume(seeds, journal)
