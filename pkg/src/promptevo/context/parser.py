"""Declaration-level recursive-descent parser.

Only headers are parsed: type declarations (with nesting), method and
constructor signatures. Method bodies, initializers and field initializers
are skipped by bracket matching, so the parser tolerates anything inside
them that the lexer can tokenize.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .lexer import ParseError, Token, check_braces, tokenize

MODIFIERS = {
    "public", "protected", "private", "static", "abstract", "final", "native",
    "synchronized", "transient", "volatile", "strictfp", "default", "sealed",
}
SIG_MODIFIERS = {"static", "abstract", "public", "private", "protected", "final"}
TYPE_KEYWORDS = {"class", "interface", "enum", "record"}


class ClassKind(str, Enum):
    CLASS = "class"
    INTERFACE = "interface"
    ENUM = "enum"
    ABSTRACT_CLASS = "abstract_class"


class Visibility(str, Enum):
    PUBLIC = "public"
    PACKAGE_PRIVATE = "package_private"
    PROTECTED = "protected"
    PRIVATE = "private"


@dataclass(frozen=True)
class MethodSig:
    name: str
    return_type: str  # empty for constructors
    params: tuple[tuple[str, str], ...]  # (name, type)
    modifiers: frozenset[str]
    signature_text: str
    source_text: str = ""
    type_params: tuple[str, ...] = ()

    @property
    def param_types(self) -> tuple[str, ...]:
        return tuple(t for _, t in self.params)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "return_type": self.return_type,
            "params": [list(p) for p in self.params],
            "modifiers": sorted(self.modifiers),
            "signature_text": self.signature_text,
        }


@dataclass(frozen=True)
class ClassInfo:
    qualified_name: str
    simple_name: str
    kind: ClassKind
    visibility: Visibility
    extends: str | None
    implements: tuple[str, ...]
    methods: tuple[MethodSig, ...]
    constructors: tuple[MethodSig, ...]
    file_path: str
    declaration_text: str
    package: str = ""
    type_params: tuple[str, ...] = ()
    enclosing: str | None = None

    @property
    def is_abstract(self) -> bool:
        return self.kind in (ClassKind.ABSTRACT_CLASS, ClassKind.INTERFACE)

    def to_dict(self) -> dict:
        return {
            "qualified_name": self.qualified_name,
            "simple_name": self.simple_name,
            "kind": self.kind.value,
            "visibility": self.visibility.value,
            "extends": self.extends,
            "implements": list(self.implements),
            "methods": [m.to_dict() for m in self.methods],
            "constructors": [c.to_dict() for c in self.constructors],
            "file_path": self.file_path,
            "declaration_text": self.declaration_text,
        }


@dataclass
class ParsedFile:
    path: str
    package: str = ""
    imports: list[str] = field(default_factory=list)  # "a.b.C" or "a.b.*"
    classes: list[ClassInfo] = field(default_factory=list)


_WS = re.compile(r"\s+")


def squash(text: str) -> str:
    """Collapse whitespace, dropping it around punctuation that does not need it."""
    text = _WS.sub(" ", text.strip())
    text = re.sub(r"\s*([<>\[\](),.])\s*", r"\1", text)
    text = text.replace(",", ", ")
    text = re.sub(r"\?(extends|super)", r"? \1", text)
    text = re.sub(r"\b(extends|super)(?=[\w?])", r"\1 ", text)
    return text


class _Parser:
    def __init__(self, text: str, path: str):
        self.text = text
        self.path = path
        self.toks = tokenize(text, path)
        check_braces(self.toks, text, path)
        self.i = 0
        self.out = ParsedFile(path)

    # token helpers -----------------------------------------------------
    def peek(self, offset: int = 0) -> Token | None:
        j = self.i + offset
        return self.toks[j] if j < len(self.toks) else None

    def at(self, text: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok is not None and tok.text == text and tok.kind in ("sym", "ident")

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of file")
        self.i += 1
        return tok

    def expect_ident(self) -> Token:
        tok = self.next()
        if tok.kind != "ident":
            raise ParseError(self.path, self.text, tok.start, f"expected identifier, got {tok.text!r}")
        return tok

    def error(self, message: str) -> ParseError:
        pos = self.toks[-1].end if self.toks else 0
        if self.i < len(self.toks):
            pos = self.toks[self.i].start
        return ParseError(self.path, self.text, pos, message)

    def skip_balanced(self, open_: str, close: str) -> Token:
        """Consume a bracketed group starting at the current token; return the closer."""
        start = self.next()
        assert start.text == open_
        depth = 1
        while True:
            tok = self.peek()
            if tok is None:
                raise ParseError(self.path, self.text, start.start, f"unclosed {open_!r}")
            self.i += 1
            if tok.kind != "sym":
                continue
            if tok.text == open_:
                depth += 1
            elif tok.text == close:
                depth -= 1
                if depth == 0:
                    return tok
            elif open_ == "<" and tok.text in ";{":
                # a stray less-than, not a type argument list
                raise ParseError(self.path, self.text, start.start, "unclosed '<'")

    def skip_statement(self) -> None:
        """Skip to the ';' ending a field or stray statement, respecting brackets."""
        while True:
            tok = self.peek()
            if tok is None or (tok.kind == "sym" and tok.text == "}"):
                return
            if tok.kind == "sym" and tok.text == ";":
                self.i += 1
                return
            if tok.kind == "sym" and tok.text in "({[":
                self.skip_balanced(tok.text, {"(": ")", "{": "}", "[": "]"}[tok.text])
            else:
                self.i += 1

    def qualified_name(self) -> str:
        parts = [self.expect_ident().text]
        while self.at(".") and self.peek(1) is not None and self.peek(1).kind == "ident":
            self.i += 1
            parts.append(self.next().text)
        return ".".join(parts)

    # grammar ------------------------------------------------------------
    def parse(self) -> ParsedFile:
        while self.peek() is not None:
            if self.at(";"):
                self.i += 1
            elif self.at("package"):
                self.i += 1
                self.out.package = self.qualified_name()
                self.skip_statement()
            elif self.at("import"):
                self.i += 1
                if self.at("static"):
                    self.i += 1
                name = self.qualified_name()
                if self.at(".") and self.at("*", 1):
                    name += ".*"
                self.out.imports.append(name)
                self.skip_statement()
            else:
                start = self.i
                self.member(enclosing=None, prefix=self.out.package, owner=None)
                if self.i == start:
                    self.i += 1
        return self.out

    def annotation(self) -> None:
        self.i += 1  # '@'
        self.qualified_name()
        if self.at("("):
            self.skip_balanced("(", ")")

    def modifiers(self) -> tuple[set[str], int]:
        """Read annotations and modifiers; return them and the first non-annotation token index."""
        mods: set[str] = set()
        first = None
        while True:
            if self.at("@") and not self.at("interface", 1):
                self.annotation()
                continue
            tok = self.peek()
            if tok is None or tok.kind != "ident":
                break
            if tok.text in MODIFIERS:
                first = self.i if first is None else first
                mods.add(tok.text)
                self.i += 1
            elif tok.text == "non" and self.at("-", 1) and self.at("sealed", 2):
                first = self.i if first is None else first
                mods.add("non-sealed")
                self.i += 3
            else:
                break
        return mods, self.i if first is None else first

    def type_ref(self) -> tuple[int, int]:
        """Consume a type; return the token index span [start, end)."""
        while self.at("@"):
            self.annotation()
        start = self.i
        self.expect_ident()
        while True:
            if self.at("<"):
                self.skip_balanced("<", ">")
            elif self.at(".") and self.peek(1) is not None and self.peek(1).kind == "ident":
                self.i += 2
            elif self.at("[") and self.at("]", 1):
                self.i += 2
            elif self.at("..."):
                self.i += 1
            else:
                break
        return start, self.i

    def span_text(self, first: int, last: int) -> str:
        """Verbatim source from token ``first`` through token ``last`` inclusive."""
        return self.text[self.toks[first].start : self.toks[last].end]

    def type_text(self, span: tuple[int, int]) -> str:
        return squash(self.span_text(span[0], span[1] - 1))

    def type_params(self) -> tuple[str, ...]:
        if not self.at("<"):
            return ()
        start = self.i
        self.skip_balanced("<", ">")
        names, depth = [], 0
        for j in range(start, self.i):
            tok = self.toks[j]
            if tok.text == "<":
                depth += 1
            elif tok.text == ">":
                depth -= 1
            elif depth == 1 and tok.kind == "ident" and self.toks[j - 1].text in ("<", ","):
                names.append(tok.text)
        return tuple(names)

    def type_list(self) -> list[str]:
        names = []
        while True:
            span = self.type_ref()
            names.append(self.type_text(span))
            if not self.at(","):
                return names
            self.i += 1

    def member(self, enclosing: ClassInfo | None, prefix: str, owner: dict | None) -> None:
        mods, first = self.modifiers()
        tok = self.peek()
        if tok is None:
            return
        if self.at("@") and self.at("interface", 1):
            self.i += 1
            self.type_decl("interface", mods, first, prefix, enclosing)
            return
        if tok.kind == "ident" and tok.text in TYPE_KEYWORDS and not (tok.text == "record" and not self._record_ahead()):
            self.type_decl(tok.text, mods, first, prefix, enclosing)
            return
        if owner is None:
            # top level but not a type: skip whatever it is
            self.skip_statement()
            return
        if self.at("{"):
            self.skip_balanced("{", "}")
            return
        tparams = self.type_params()
        tok = self.peek()
        if tok is None:
            return
        # constructor (or record compact constructor)
        if tok.kind == "ident" and tok.text == owner["simple_name"] and (self.at("(", 1) or self.at("{", 1)):
            self.i += 1
            if self.at("{"):
                self.skip_balanced("{", "}")
                return
            owner["constructors"].append(self.callable(tok.text, "", mods, first, tparams))
            return
        try:
            type_span = self.type_ref()
        except ParseError:
            self.skip_statement()
            return
        name_tok = self.peek()
        if name_tok is not None and name_tok.kind == "ident" and self.at("(", 1):
            self.i += 1
            owner["methods"].append(self.callable(name_tok.text, self.type_text(type_span), mods, first, tparams))
            return
        self.skip_statement()

    def _record_ahead(self) -> bool:
        nxt = self.peek(1)
        return nxt is not None and nxt.kind == "ident" and (self.at("(", 2) or self.at("<", 2))

    def callable(self, name: str, return_type: str, mods: set[str], first: int, tparams: tuple[str, ...]) -> MethodSig:
        params = self.param_list()
        last = self.i - 1
        while self.at("[") and self.at("]", 1):
            self.i += 2
            last = self.i - 1
        if self.at("throws"):
            self.i += 1
            self.type_list()
            last = self.i - 1
        if self.at("default"):
            self.i += 1
            self.skip_statement()
            end_tok = self.toks[self.i - 1]
        elif self.at("{"):
            end_tok = self.skip_balanced("{", "}")
        elif self.at(";"):
            end_tok = self.next()
        else:
            raise self.error(f"expected method body after header of {name!r}")
        header = self.span_text(first, last)
        source = self.text[self.toks[first].start : end_tok.end]
        sig_mods = frozenset(m for m in mods if m in SIG_MODIFIERS)
        return MethodSig(name, return_type, tuple(params), sig_mods, header, source, tparams)

    def param_list(self) -> list[tuple[str, str]]:
        open_tok = self.peek()
        self.i += 1
        params: list[tuple[str, str]] = []
        if self.at(")"):
            self.i += 1
            return params
        while True:
            while self.at("final") or (self.at("@") and not self.at("interface", 1)):
                if self.at("final"):
                    self.i += 1
                else:
                    self.annotation()
            span = self.type_ref()
            ptype = self.type_text(span)
            name_tok = self.expect_ident()
            while self.at("[") and self.at("]", 1):
                self.i += 2
                ptype += "[]"
            if name_tok.text != "this":  # receiver parameters are not real arguments
                params.append((name_tok.text, ptype))
            if self.at(","):
                self.i += 1
                continue
            if self.at(")"):
                self.i += 1
                return params
            raise ParseError(self.path, self.text, open_tok.start, "malformed parameter list")

    def type_decl(self, keyword: str, mods: set[str], first: int, prefix: str, enclosing: ClassInfo | None) -> None:
        self.i += 1  # keyword
        name = self.expect_ident().text
        tparams = self.type_params()
        if keyword == "record" and self.at("("):
            self.skip_balanced("(", ")")
        extends: list[str] = []
        implements: list[str] = []
        while not self.at("{"):
            if self.peek() is None:
                raise self.error(f"missing body for type {name!r}")
            if self.at("extends"):
                self.i += 1
                extends = self.type_list()
            elif self.at("implements"):
                self.i += 1
                implements = self.type_list()
            elif self.at("permits"):
                self.i += 1
                self.type_list()
            else:
                raise self.error(f"unexpected {self.peek().text!r} in declaration of {name!r}")
        header = self.span_text(first, self.i - 1)
        if keyword == "interface":
            kind = ClassKind.INTERFACE
            implements, extends = extends, []
        elif keyword == "enum":
            kind = ClassKind.ENUM
        elif "abstract" in mods:
            kind = ClassKind.ABSTRACT_CLASS
        else:
            kind = ClassKind.CLASS
        if "public" in mods:
            vis = Visibility.PUBLIC
        elif "protected" in mods:
            vis = Visibility.PROTECTED
        elif "private" in mods:
            vis = Visibility.PRIVATE
        else:
            vis = Visibility.PACKAGE_PRIVATE
        qualified = f"{prefix}.{name}" if prefix else name
        owner = {"simple_name": name, "methods": [], "constructors": []}
        slot = len(self.out.classes)
        self.out.classes.append(None)  # placeholder keeps outer-before-inner order
        stub = ClassInfo(
            qualified, name, kind, vis, None, (), (), (), self.path, header,
            self.out.package, tparams, enclosing.qualified_name if enclosing else None,
        )
        self.body(keyword, stub, qualified, owner)
        self.out.classes[slot] = ClassInfo(
            qualified_name=qualified,
            simple_name=name,
            kind=kind,
            visibility=vis,
            extends=extends[0] if extends else None,
            implements=tuple(implements),
            methods=tuple(owner["methods"]),
            constructors=tuple(owner["constructors"]),
            file_path=self.path,
            declaration_text=header,
            package=self.out.package,
            type_params=tparams,
            enclosing=stub.enclosing,
        )

    def body(self, keyword: str, info: ClassInfo, qualified: str, owner: dict) -> None:
        self.i += 1  # '{'
        if keyword == "enum":
            self.enum_constants()
        while not self.at("}"):
            start = self.i
            self.member(info, qualified, owner)
            if self.i == start:
                self.i += 1
        self.i += 1

    def enum_constants(self) -> None:
        while True:
            while self.at("@"):
                self.annotation()
            if self.at(";"):
                self.i += 1
                return
            if self.at("}"):
                return
            if self.peek() is not None and self.peek().kind == "ident":
                self.i += 1
                if self.at("("):
                    self.skip_balanced("(", ")")
                if self.at("{"):
                    self.skip_balanced("{", "}")
            if self.at(","):
                self.i += 1
                continue
            if self.at(";"):
                self.i += 1
                return
            if self.at("}"):
                return
            raise self.error("malformed enum constant list")


def parse_java(text: str, path: str = "<string>") -> ParsedFile:
    return _Parser(text, path).parse()


def parse_source_file(text: str, path: str = "<string>") -> list[ClassInfo]:
    """Every type declared in ``text``, outer types before their nested types."""
    return parse_java(text, path).classes
