"""Assembles the per-focal-method context shown to the model."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Any

from .index import FocalMethod, ProjectIndex, _erase, find_subclasses, split_top_level
from .parser import Visibility

log = logging.getLogger(__name__)

MAX_SUBCLASSES = 8
MAX_ARGUMENT_TYPES = 6

PRIMITIVES = {"byte", "short", "int", "long", "float", "double", "boolean", "char", "void", "var"}


@dataclass(frozen=True)
class ArgumentTypeInfo:
    type_name: str
    class_signature: str
    constructor_signatures: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "type_name": self.type_name,
            "class_signature": self.class_signature,
            "constructor_signatures": list(self.constructor_signatures),
        }


@dataclass(frozen=True)
class ContextBundle:
    class_signature: str
    focal_method_source: str
    member_method_signatures: tuple[str, ...] = ()
    subclass_signatures: tuple[str, ...] = ()
    argument_type_info: tuple[ArgumentTypeInfo, ...] = ()
    subclasses_omitted: int = 0
    argument_types_omitted: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "class_signature": self.class_signature,
            "focal_method_source": self.focal_method_source,
            "member_method_signatures": list(self.member_method_signatures),
            "subclass_signatures": list(self.subclass_signatures),
            "argument_type_info": [a.to_dict() for a in self.argument_type_info],
            "subclasses_omitted": self.subclasses_omitted,
            "argument_types_omitted": self.argument_types_omitted,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ContextBundle:
        return cls(
            data["class_signature"],
            data["focal_method_source"],
            tuple(data.get("member_method_signatures", ())),
            tuple(data.get("subclass_signatures", ())),
            tuple(
                ArgumentTypeInfo(a["type_name"], a["class_signature"], tuple(a["constructor_signatures"]))
                for a in data.get("argument_type_info", ())
            ),
            int(data.get("subclasses_omitted", 0)),
            int(data.get("argument_types_omitted", 0)),
        )


def _type_candidates(type_text: str) -> list[str]:
    """The base type plus its top-level generic arguments (one level deep)."""
    text = re.sub(r"@[\w.]+(\([^)]*\))?\s*", "", type_text).strip()
    names = [_erase(text)]
    lt = text.find("<")
    if lt >= 0 and text.rstrip("[]. ").endswith(">"):
        inner = text[lt + 1 : text.rstrip("[]. ").rfind(">")]
        for arg in split_top_level(inner):
            arg = re.sub(r"^\s*\?\s*(extends|super)?\s*", "", arg)
            if arg:
                names.append(_erase(arg))
    return [n for n in names if n]


def trace_argument_types(focal: FocalMethod, index: ProjectIndex) -> list[ArgumentTypeInfo]:
    """Class signature and constructors for each in-project parameter type.

    Primitive, library and unresolvable types are skipped; ``List<Money>``
    traces both ``List`` (if in-project) and ``Money``.
    """
    owner = index.get(focal.class_name)
    type_vars = set(focal.method.type_params)
    scope = owner
    while scope is not None:
        type_vars.update(scope.type_params)
        scope = index.classes.get(scope.enclosing) if scope.enclosing else None
    seen: list[str] = []
    for ptype in focal.method.param_types:
        for name in _type_candidates(ptype):
            if name in PRIMITIVES or name in type_vars:
                continue
            qn = index.resolve(name, owner)
            if qn is None:
                log.debug("%s: parameter type %s is not a project class", focal.id, name)
                continue
            if qn not in seen:
                seen.append(qn)
    out = []
    for qn in seen:
        info = index.classes[qn]
        out.append(ArgumentTypeInfo(qn, info.declaration_text, tuple(c.signature_text for c in info.constructors)))
    return out


def build_context_bundle(
    focal: FocalMethod | str,
    index: ProjectIndex,
    *,
    max_subclasses: int = MAX_SUBCLASSES,
    max_argument_types: int = MAX_ARGUMENT_TYPES,
) -> ContextBundle:
    if isinstance(focal, str):
        focal = index.find_focal(focal)
    info = index.get(focal.class_name)
    members = tuple(c.signature_text for c in info.constructors) + tuple(
        m.signature_text for m in info.methods if m is not focal.method
    )
    subclasses: tuple[str, ...] = ()
    sub_omitted = 0
    # abstract types and types a test cannot reach directly need a concrete subtype
    if info.is_abstract or info.visibility is not Visibility.PUBLIC:
        subs = [s.declaration_text for s in find_subclasses(index, info.qualified_name)]
        subclasses = tuple(subs[:max_subclasses])
        sub_omitted = max(0, len(subs) - max_subclasses)
    args = trace_argument_types(focal, index)
    return ContextBundle(
        class_signature=info.declaration_text,
        focal_method_source=focal.source_text,
        member_method_signatures=members,
        subclass_signatures=subclasses,
        argument_type_info=tuple(args[:max_argument_types]),
        subclasses_omitted=sub_omitted,
        argument_types_omitted=max(0, len(args) - max_argument_types),
    )
