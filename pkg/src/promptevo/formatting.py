"""Rendering of the composed prompt: instruction, rules, then code context."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

from .context.bundle import ContextBundle
from .core import Prompt, Rule, RuleSet

CONTEXT_PLACEHOLDER = "{CONTEXT}"

RULES_HEADER = "Rules:"
CLASS_HEADER = "Class signature:"
FOCAL_HEADER = "Focal method:"
MEMBERS_HEADER = "Member method signatures:"
SUBCLASS_HEADER = "Subclass information:"
ARGUMENT_HEADER = "Argument type information:"


def _rule_texts(rules: RuleSet | Iterable[Rule | str]) -> list[str]:
    return [r.text if isinstance(r, Rule) else str(r) for r in rules]


def render_rules(rules: RuleSet | Iterable[Rule | str]) -> str | None:
    texts = _rule_texts(rules)
    if not texts:
        return None
    return RULES_HEADER + "\n" + "\n".join(f"{i}. {t}" for i, t in enumerate(texts, 1))


def render_context(bundle: ContextBundle) -> str:
    sections = [
        f"{CLASS_HEADER}\n{bundle.class_signature}",
        f"{FOCAL_HEADER}\n{bundle.focal_method_source}",
        f"{MEMBERS_HEADER}\n" + ("\n".join(bundle.member_method_signatures) or "(none)"),
    ]
    if bundle.subclass_signatures:
        lines = list(bundle.subclass_signatures)
        if bundle.subclasses_omitted:
            lines.append(f"({bundle.subclasses_omitted} more subclasses omitted)")
        sections.append(SUBCLASS_HEADER + "\n" + "\n".join(lines))
    if bundle.argument_type_info:
        blocks = []
        for arg in bundle.argument_type_info:
            block = [f"Type: {arg.type_name}", arg.class_signature]
            if arg.constructor_signatures:
                block.append("Constructors:")
                block.extend(f"  {c}" for c in arg.constructor_signatures)
            blocks.append("\n".join(block))
        if bundle.argument_types_omitted:
            blocks.append(f"({bundle.argument_types_omitted} more argument types omitted)")
        sections.append(ARGUMENT_HEADER + "\n" + "\n".join(blocks))
    return "\n\n".join(sections)


def render_template(instruction: str, rules: RuleSet | Iterable[Rule | str]) -> str:
    parts = [instruction.strip()]
    rendered_rules = render_rules(rules)
    if rendered_rules:
        parts.append(rendered_rules)
    parts.append(CONTEXT_PLACEHOLDER)
    return "\n\n".join(parts)


def fill_template(template: str, bundle: ContextBundle) -> str:
    head, _, tail = template.rpartition(CONTEXT_PLACEHOLDER)
    return head + render_context(bundle) + tail


def format_final(prompt: Prompt | str, rules: RuleSet | Iterable[Rule | str], bundle: ContextBundle) -> str:
    """Render the full prompt for one focal method.

    Sections, separated by one blank line: instruction, ``Rules:`` (only if
    there are rules), class signature, focal method, member signatures,
    subclass information and argument types (the last two only if present).
    """
    instruction = prompt.instruction if isinstance(prompt, Prompt) else prompt
    return fill_template(render_template(instruction, rules), bundle)


@dataclass(frozen=True)
class FinalPromptArtifact:
    instruction: str
    rules: tuple[str, ...]
    rendered_template: str
    prompt_id: str = ""
    fitness: float | None = None

    @classmethod
    def build(cls, prompt: Prompt, rules: RuleSet, fitness: float | None = None) -> FinalPromptArtifact:
        return cls(prompt.instruction, rules.texts, render_template(prompt.instruction, rules), prompt.id, fitness)

    def render(self, bundle: ContextBundle) -> str:
        return fill_template(self.rendered_template, bundle)

    def to_dict(self) -> dict[str, Any]:
        return {
            "prompt_id": self.prompt_id,
            "instruction": self.instruction,
            "rules": list(self.rules),
            "rendered_template": self.rendered_template,
            "fitness": self.fitness,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> FinalPromptArtifact:
        return cls(
            data["instruction"],
            tuple(data.get("rules", ())),
            data.get("rendered_template") or render_template(data["instruction"], data.get("rules", ())),
            data.get("prompt_id", ""),
            data.get("fitness"),
        )
