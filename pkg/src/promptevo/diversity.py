"""Diversity-guided prompt generation.

The top ``size - n`` prompts survive unchanged. The model is asked for ``n``
mutually different ways to modify them, and one new prompt is written per
modification method, so the population size never changes.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import Origin, Prompt, PromptPopulation, select_top
from .llm_client import LLM, LLMError, Tag
from .prompting import Templates, clean_instruction, parse_numbered_list
from .rule_induction.distance import mean_pairwise_edit_distance, normalized_distance

log = logging.getLogger(__name__)

DISTINCTNESS_THRESHOLD = 0.3
MAX_REQUERIES = 3
TEMPERATURE_STEP = 0.2

__all__ = [
    "ConfigError",
    "ModificationMethod",
    "StepResult",
    "generate_modification_methods",
    "mean_pairwise_edit_distance",
    "step",
    "synthesize_prompt",
]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModificationMethod:
    id: str
    directive: str
    iteration: int

    def to_dict(self) -> dict:
        return {"id": self.id, "directive": self.directive, "iteration": self.iteration}


def _distinct(a: str, b: str, threshold: float) -> bool:
    return normalized_distance(a.lower(), b.lower()) >= threshold


def _greedy_distinct(directives: Sequence[str], threshold: float, keep: Sequence[str] = ()) -> list[str]:
    """Keep directives in order, dropping any too close to one already kept."""
    kept = list(keep)
    for d in directives:
        if all(_distinct(d, k, threshold) for k in kept):
            kept.append(d)
    return kept[len(keep):]


def scored_prompts_block(selected: Sequence[Prompt], scores: Mapping[str, float]) -> str:
    return "\n".join(
        f"Instruction {i}: {p.instruction}\nScore: {scores[p.id]:.2f}" if p.id in scores else f"Instruction {i}: {p.instruction}"
        for i, p in enumerate(selected, 1)
    )


def generate_modification_methods(
    selected: Sequence[Prompt],
    scores: Mapping[str, float],
    n: int,
    llm: LLM,
    iteration: int = 0,
    templates: Templates | None = None,
    threshold: float = DISTINCTNESS_THRESHOLD,
) -> list[ModificationMethod]:
    """Ask for ``n`` modification methods that are pairwise at least ``threshold`` apart.

    Re-queries up to three times at rising temperature. If the model still
    falls short, near-duplicates are dropped (the later of each pair) and the
    gap is filled from the bundled fallback directives.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not selected:
        raise ValueError("no prompts selected")
    templates = templates or Templates()
    request = templates.fill("modification", {"PROMPTS_WITH_SCORES": scored_prompts_block(selected, scores), "N": n})
    base_temp = llm.temperatures[Tag.MODIFICATION_METHOD]
    best: list[str] = []
    for attempt in range(MAX_REQUERIES + 1):
        try:
            reply = llm.ask(request, Tag.MODIFICATION_METHOD, temperature=base_temp + TEMPERATURE_STEP * attempt)
        except LLMError as exc:
            log.warning("modification-method request failed: %s", exc)
            continue
        parsed = parse_numbered_list(reply)
        kept = parsed[:1] if n == 1 else _greedy_distinct(parsed, threshold)
        if len(kept) >= n:
            best = kept
            break
        if len(kept) > len(best):
            best = kept
        log.info("got %d distinct modification methods of %d wanted (attempt %d)", len(kept), n, attempt + 1)
    directives = best[:n]
    if len(directives) < n:
        fill_in = _greedy_distinct(templates.fallback_directives(), threshold, keep=directives)
        directives += fill_in[: n - len(directives)]
        if len(directives) < n:
            raise ConfigError(f"only {len(directives)} distinct modification methods available, need {n}")
        log.warning("used fallback modification methods in iteration %d", iteration)
    return [ModificationMethod(f"d{iteration}-{j}", d, iteration) for j, d in enumerate(directives)]


def synthesize_prompt(
    selected: Sequence[Prompt],
    scores: Mapping[str, float],
    method: ModificationMethod,
    llm: LLM,
    iteration: int,
    prompt_id: str,
    templates: Templates | None = None,
) -> Prompt:
    """Write one new prompt by applying ``method`` to the selected prompts.

    An empty or failed reply is retried once; after that the best selected
    prompt's instruction is reused so the population does not shrink.
    """
    if not method.directive.strip():
        raise ValueError("empty modification directive")
    templates = templates or Templates()
    request = templates.fill(
        "synthesis", {"PROMPTS_WITH_SCORES": scored_prompts_block(selected, scores), "DIRECTIVE": method.directive}
    )
    origin = Origin.generated(iteration, method.id)
    parents = tuple(p.id for p in selected)
    for attempt in range(2):
        try:
            text = clean_instruction(llm.ask(request, Tag.PROMPT_SYNTHESIS))
        except LLMError as exc:
            log.warning("prompt synthesis failed (attempt %d): %s", attempt + 1, exc)
            continue
        if text:
            return Prompt(prompt_id, text, origin, parents)
    log.warning("synthesis for %s gave nothing usable; copying %s", method.id, selected[0].id)
    return Prompt(prompt_id, selected[0].instruction, origin, parents)


@dataclass(frozen=True)
class StepResult:
    population: PromptPopulation
    selected: tuple[Prompt, ...]
    methods: tuple[ModificationMethod, ...]
    new_prompts: tuple[Prompt, ...]


def step(
    population: PromptPopulation,
    scores: Mapping[str, float],
    n: int,
    llm: LLM,
    iteration: int,
    templates: Templates | None = None,
    parallelism: int = 1,
    threshold: float = DISTINCTNESS_THRESHOLD,
) -> StepResult:
    """Survivors (best first) followed by ``n`` freshly synthesized prompts."""
    if not 1 <= n < len(population):
        raise ValueError(f"n={n} must satisfy 1 <= n < population size {len(population)}")
    templates = templates or Templates()
    selected = select_top(population, scores, len(population) - n)
    methods = generate_modification_methods(selected, scores, n, llm, iteration, templates, threshold)

    def make(j: int) -> Prompt:
        return synthesize_prompt(selected, scores, methods[j], llm, iteration, f"p{iteration}-{j}", templates)

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            new = list(pool.map(make, range(n)))
    else:
        new = [make(j) for j in range(n)]
    pop = PromptPopulation(tuple(selected) + tuple(new), iteration)
    return StepResult(pop, tuple(selected), tuple(methods), tuple(new))
