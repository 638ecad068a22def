"""Project-wide class index with an inverted subclass map."""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

from .lexer import ParseError
from .parser import ClassInfo, MethodSig, ParsedFile, parse_java, squash

log = logging.getLogger(__name__)


class UnknownClass(KeyError):
    pass


class FocalNotFound(LookupError):
    pass


@dataclass(frozen=True)
class FocalMethod:
    id: str
    class_name: str
    source_text: str
    method: MethodSig


@dataclass(frozen=True)
class ProjectIndex:
    classes: dict[str, ClassInfo]
    subclass_index: dict[str, tuple[str, ...]]
    source_root: str
    imports: dict[str, tuple[str, ...]] = field(default_factory=dict)  # file_path -> imports
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        by_simple: dict[str, list[str]] = {}
        for qn, info in self.classes.items():
            by_simple.setdefault(info.simple_name, []).append(qn)
        object.__setattr__(self, "_by_simple", by_simple)

    def get(self, qualified_name: str) -> ClassInfo:
        try:
            return self.classes[qualified_name]
        except KeyError:
            raise UnknownClass(qualified_name) from None

    def resolve(self, name: str, context: ClassInfo) -> str | None:
        """Resolve a type name as seen from ``context``; None if not in the project.

        Lookup order: already-qualified name, names nested in the enclosing
        classes, single-type imports, the same package, on-demand imports,
        and finally a project-wide unique simple name.
        """
        name = _erase(name)
        if not name:
            return None
        head, _, rest = name.partition(".")

        def with_rest(qn: str) -> str | None:
            full = f"{qn}.{rest}" if rest else qn
            return full if full in self.classes else None

        if "." in name and name in self.classes:
            return name
        scope: str | None = context.qualified_name
        while scope:
            hit = with_rest(f"{scope}.{head}")
            if hit:
                return hit
            scope = self.classes[scope].enclosing if scope in self.classes else None
        imports = self.imports.get(context.file_path, ())
        for imp in imports:
            if not imp.endswith(".*") and imp.rsplit(".", 1)[-1] == head:
                return with_rest(imp)
        if context.package:
            hit = with_rest(f"{context.package}.{head}")
            if hit:
                return hit
        elif head in self.classes:
            return with_rest(head)
        for imp in imports:
            if imp.endswith(".*"):
                hit = with_rest(f"{imp[:-2]}.{head}")
                if hit:
                    return hit
        candidates = self._by_simple.get(head, [])  # type: ignore[attr-defined]
        candidates = [c for c in candidates if self.classes[c].enclosing is None or not rest]
        if len(candidates) == 1:
            return with_rest(candidates[0])
        return None

    def find_focal(self, focal_id: str) -> FocalMethod:
        class_name, method_name, params = parse_focal_id(focal_id)
        if class_name not in self.classes:
            raise FocalNotFound(f"class {class_name!r} of focal method {focal_id!r} is not in the index")
        info = self.classes[class_name]
        matches = [m for m in info.methods if m.name == method_name]
        if params is not None:
            matches = [m for m in matches if tuple(_compact(t) for t in m.param_types) == params]
        if len(matches) != 1:
            raise FocalNotFound(f"{focal_id!r} matches {len(matches)} methods in {class_name}")
        return FocalMethod(focal_id, class_name, matches[0].source_text, matches[0])


def parse_focal_id(focal_id: str) -> tuple[str, str, tuple[str, ...] | None]:
    """Split ``pkg.Cls#name(T1,T2)`` into parts; params are None when omitted."""
    m = re.fullmatch(r"\s*([\w.$]+)#(\w+)\s*(?:\((.*)\))?\s*", focal_id)
    if not m:
        raise FocalNotFound(f"malformed focal method id {focal_id!r}")
    cls, name, plist = m.groups()
    if plist is None:
        return cls, name, None
    return cls, name, tuple(_compact(p) for p in split_top_level(plist) if p.strip())


def focal_id_for(info: ClassInfo, method: MethodSig) -> str:
    return f"{info.qualified_name}#{method.name}({','.join(_compact(t) for t in method.param_types)})"


def split_top_level(text: str, sep: str = ",") -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "<":
            depth += 1
        elif ch == ">":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def _compact(type_text: str) -> str:
    return re.sub(r"\s+", "", type_text)


def _erase(type_text: str) -> str:
    """Strip generic arguments, array dims, varargs and annotations from a type name."""
    text = re.sub(r"@[\w.]+(\([^)]*\))?", "", type_text)
    out, depth = [], 0
    for ch in text:
        if ch == "<":
            depth += 1
        elif ch == ">":
            depth -= 1
        elif depth == 0:
            out.append(ch)
    return re.sub(r"(\[\]|\.\.\.|\s)", "", "".join(out))


def _parse_one(path: Path, root: Path) -> tuple[ParsedFile | None, str | None]:
    rel = path.relative_to(root).as_posix()
    try:
        text = path.read_text(encoding="utf-8", errors="replace")
        return parse_java(text, rel), None
    except ParseError as exc:
        return None, str(exc)


def build_index(parsed: Iterable[ParsedFile], source_root: str = "", warnings: Iterable[str] = ()) -> ProjectIndex:
    parsed = sorted(parsed, key=lambda pf: pf.path)
    classes: dict[str, ClassInfo] = {}
    imports: dict[str, tuple[str, ...]] = {}
    warnings = list(warnings)
    for pf in parsed:
        imports[pf.path] = tuple(pf.imports)
        for info in pf.classes:
            if info.qualified_name in classes:
                warnings.append(f"{pf.path}: duplicate class {info.qualified_name} ignored")
                continue
            classes[info.qualified_name] = info
    raw = ProjectIndex(classes, {}, source_root, imports)
    resolved: dict[str, ClassInfo] = {}
    for qn, info in classes.items():
        ext = None
        if info.extends:
            ext = raw.resolve(info.extends, info) or _erase(info.extends)
        impl = tuple(raw.resolve(t, info) or _erase(t) for t in info.implements)
        resolved[qn] = replace(info, extends=ext, implements=impl)
    subs: dict[str, list[str]] = {}
    for qn, info in resolved.items():
        for sup in ([info.extends] if info.extends else []) + list(info.implements):
            if qn not in subs.setdefault(sup, []):
                subs[sup].append(qn)
    order = {qn: (info.file_path, qn) for qn, info in resolved.items()}
    subclass_index = {sup: tuple(sorted(v, key=order.__getitem__)) for sup, v in sorted(subs.items())}
    return ProjectIndex(resolved, subclass_index, source_root, imports, tuple(warnings))


def index_project(source_root: str | Path, extensions: Iterable[str] = (".java",), parallelism: int = 1) -> ProjectIndex:
    """Parse every matching file under ``source_root`` into a :class:`ProjectIndex`.

    Files that fail to parse are reported in ``warnings`` and otherwise ignored.
    """
    root = Path(source_root)
    if not root.is_dir():
        raise FileNotFoundError(f"source root {root} does not exist")
    exts = tuple(extensions)
    paths = sorted(p for p in root.rglob("*") if p.is_file() and p.name.endswith(exts))
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        results = list(pool.map(lambda p: _parse_one(p, root), paths))
    warnings = [w for _, w in results if w]
    for w in warnings:
        log.warning("skipping unparsable file: %s", w)
    return build_index((pf for pf, _ in results if pf), str(root), warnings)


def find_subclasses(index: ProjectIndex, class_name: str) -> list[ClassInfo]:
    """Direct subtypes of ``class_name`` (one level), ordered by file path."""
    if class_name not in index.classes:
        raise UnknownClass(class_name)
    return [index.classes[qn] for qn in index.subclass_index.get(class_name, ())]


__all__ = [
    "FocalMethod",
    "FocalNotFound",
    "ProjectIndex",
    "UnknownClass",
    "build_index",
    "find_subclasses",
    "focal_id_for",
    "index_project",
    "parse_focal_id",
    "split_top_level",
    "squash",
]
