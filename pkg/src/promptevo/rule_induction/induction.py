"""Sampling, reflection, rule transformation and rule validation."""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from ..core import FailureRecord, Prompt, Rule, RuleSet, ScoreReport, fitness
from ..evaluator.evaluate import ComposedPrompt, DevSet
from ..llm_client import LLM, Tag
from ..prompting import Templates, parse_numbered_list
from .clustering import FailureCluster, cluster_failures, select_reflection_examples
from .distance import cluster_weights, similarity

log = logging.getLogger(__name__)

MAX_RULE_CHARS = 300
MAX_RULE_CANDIDATES = 5


def sample_cluster(
    clusters: Sequence[FailureCluster], handled: Sequence[FailureRecord], rng: random.Random
) -> tuple[FailureCluster, list[float]]:
    """Draw one cluster with probability proportional to size times novelty.

    Consumes exactly one ``rng.random()`` value. Returns the cluster and the
    weights used.
    """
    if not clusters:
        raise ValueError("no clusters to sample from")
    handled_texts = [h.normalized_error for h in handled]
    sims = [similarity(c.medoid.normalized_error, handled_texts) for c in clusters]
    weights = cluster_weights([c.size for c in clusters], sims)
    u = rng.random()
    acc = 0.0
    for cluster, w in zip(clusters, weights):
        acc += w
        if u < acc:
            return cluster, weights
    # float round-off: fall to the last cluster with positive weight
    last = max(i for i, w in enumerate(weights) if w > 0)
    return clusters[last], weights


@dataclass(frozen=True)
class ReflectionOutput:
    explanations: str
    solutions: str
    example_ids: tuple[str, ...]


_HEADING = r"(?im)^[ \t#>*_-]*{word}s?[ \t*_]*:?[ \t*_]*"


def parse_reflection(reply: str) -> tuple[str, str] | None:
    exp = re.search(_HEADING.format(word="explanation"), reply)
    sol = re.search(_HEADING.format(word="solution"), reply)
    if not exp or not sol or sol.start() < exp.start():
        return None
    explanations = reply[exp.end() : sol.start()].strip()
    solutions = reply[sol.end() :].strip()
    if not explanations or not solutions:
        return None
    return explanations, solutions


def _examples_block(examples: Sequence[FailureRecord], focal_sources: Mapping[str, str]) -> str:
    blocks = []
    for i, ex in enumerate(examples, 1):
        blocks.append(
            f"Example {i}\n"
            f"Method under test:\n{focal_sources.get(ex.focal_method_id, ex.focal_method_id)}\n"
            f"Generated test:\n{ex.test_source or '(no test code was produced)'}\n"
            f"Error:\n{ex.normalized_error}"
        )
    return "\n\n".join(blocks)


def reflect(
    examples: Sequence[FailureRecord],
    llm: LLM,
    focal_sources: Mapping[str, str] | None = None,
    templates: Templates | None = None,
) -> ReflectionOutput | None:
    """Ask the model why the examples failed; None if no usable answer after one retry."""
    templates = templates or Templates()
    request = templates.fill("reflection", {"EXAMPLES": _examples_block(examples, focal_sources or {})})
    for attempt in range(2):
        parsed = parse_reflection(llm.ask(request, Tag.REFLECTION))
        if parsed:
            return ReflectionOutput(parsed[0], parsed[1], tuple(e.focal_method_id for e in examples))
        log.warning("reflection reply lacks explanations or solutions (attempt %d)", attempt + 1)
    return None


def transform_to_rules(
    reflection: ReflectionOutput,
    llm: LLM,
    templates: Templates | None = None,
    id_prefix: str = "r",
    source_cluster_id: str | None = None,
) -> list[Rule]:
    """Turn a reflection into at most five short rule candidates.

    Rules longer than 300 characters are dropped rather than truncated.
    Candidates carry ``score_delta=0`` until validated.
    """
    templates = templates or Templates()
    request = templates.fill(
        "transformation", {"EXPLANATIONS": reflection.explanations, "SOLUTIONS": reflection.solutions}
    )
    texts = []
    for item in parse_numbered_list(llm.ask(request, Tag.RULE_TRANSFORMATION)):
        if len(item) > MAX_RULE_CHARS:
            log.warning("dropping overlong rule candidate (%d chars)", len(item))
            continue
        texts.append(item)
    return [Rule(f"{id_prefix}{k}", t, source_cluster_id) for k, t in enumerate(texts[:MAX_RULE_CANDIDATES])]


@dataclass(frozen=True)
class RuleValidation:
    accepted: Rule | None
    baseline: float
    candidate_scores: tuple[tuple[Rule, float], ...] = ()


EvaluateFn = Callable[[ComposedPrompt, DevSet], ScoreReport]


def validate_rules(
    candidates: Sequence[Rule],
    best_prompt: Prompt,
    existing_rules: RuleSet,
    dev: DevSet,
    evaluate: EvaluateFn,
    baseline: float | None = None,
) -> RuleValidation:
    """Keep the candidate whose addition most improves the best prompt, if any does.

    ``baseline`` is the fitness of the best prompt with ``existing_rules``; it
    is evaluated here when not supplied. Only strictly better candidates
    qualify; among equals the earlier candidate wins.
    """
    if baseline is None:
        baseline = fitness(evaluate(ComposedPrompt.of(best_prompt.id, best_prompt.instruction, existing_rules), dev))
    scored = []
    for cand in candidates:
        composed = ComposedPrompt.of(
            f"{best_prompt.id}+{cand.id}", best_prompt.instruction, existing_rules.texts + (cand.text,)
        )
        scored.append((cand, fitness(evaluate(composed, dev))))
    best: tuple[Rule, float] | None = None
    for cand, score in scored:
        if score > baseline and (best is None or score > best[1]):
            best = (cand, score)
    accepted = None
    if best is not None:
        cand, score = best
        accepted = Rule(cand.id, cand.text, cand.source_cluster_id, score - baseline)
    return RuleValidation(accepted, baseline, tuple(scored))


@dataclass
class InductionResult:
    clusters: list[FailureCluster] = field(default_factory=list)
    weights: list[float] = field(default_factory=list)
    sampled: FailureCluster | None = None
    examples: list[FailureRecord] = field(default_factory=list)
    reflection: ReflectionOutput | None = None
    candidates: list[Rule] = field(default_factory=list)
    validation: RuleValidation | None = None

    @property
    def accepted(self) -> Rule | None:
        return self.validation.accepted if self.validation else None

    @property
    def handled_added(self) -> FailureRecord | None:
        return self.sampled.medoid if self.sampled else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "clusters": [
                {"id": c.id, "size": c.size, "medoid_error": c.medoid.normalized_error} for c in self.clusters
            ],
            "weights": self.weights,
            "sampled_cluster": self.sampled.id if self.sampled else None,
            "reflection_examples": [e.focal_method_id for e in self.examples],
            "reflection": (
                {"explanations": self.reflection.explanations, "solutions": self.reflection.solutions}
                if self.reflection
                else None
            ),
            "candidate_rules": [
                {"id": r.id, "text": r.text, "score": s}
                for r, s in (self.validation.candidate_scores if self.validation else ())
            ],
            "baseline_score": self.validation.baseline if self.validation else None,
            "accepted_rule": self.accepted.to_dict() if self.accepted else None,
            "handled_added": self.handled_added.to_dict() if self.handled_added else None,
        }


def induce_rule(
    failures: Sequence[FailureRecord],
    handled: Sequence[FailureRecord],
    best_prompt: Prompt,
    rules: RuleSet,
    dev: DevSet,
    evaluate: EvaluateFn,
    llm: LLM,
    rng: random.Random,
    *,
    iteration: int = 0,
    eps: float = 0.3,
    min_pts: int = 2,
    reflection_k: int = 3,
    baseline: float | None = None,
    templates: Templates | None = None,
    focal_sources: Mapping[str, str] | None = None,
) -> InductionResult:
    """One round of cluster, sample, reflect, transform and validate.

    The sampled cluster's medoid is reported as handled even when no rule
    survives validation, so the same failure is down-weighted next time.
    """
    result = InductionResult()
    result.clusters = cluster_failures(failures, eps, min_pts, id_prefix=f"c{iteration}-")
    if not result.clusters:
        return result
    result.sampled, result.weights = sample_cluster(result.clusters, handled, rng)
    result.examples = select_reflection_examples(result.sampled, reflection_k)
    if focal_sources is None:
        focal_sources = {e.focal_method_id: e.bundle.focal_method_source for e in dev.entries}
    result.reflection = reflect(result.examples, llm, focal_sources, templates)
    if result.reflection is None:
        return result
    result.candidates = transform_to_rules(
        result.reflection, llm, templates, id_prefix=f"r{iteration}-", source_cluster_id=result.sampled.id
    )
    if not result.candidates:
        return result
    result.validation = validate_rules(result.candidates, best_prompt, rules, dev, evaluate, baseline)
    return result
