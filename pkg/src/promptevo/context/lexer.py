"""Tokenizer for Java-like sources, just detailed enough for declarations.

Comments are dropped; string, char and text-block literals become single
tokens so braces inside them never reach the parser. Operators are emitted
one character at a time (``>>`` is two ``>`` tokens), which keeps generic
argument matching trivial.
"""

from __future__ import annotations

from dataclasses import dataclass


class ParseError(Exception):
    def __init__(self, path: str, text: str, pos: int, message: str):
        self.path = path
        self.byte_offset = len(text[:pos].encode("utf-8"))
        super().__init__(f"{path}: byte {self.byte_offset}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | number | string | char | sym
    text: str
    start: int
    end: int


def tokenize(text: str, path: str = "<string>") -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif text.startswith("//", i):
            nl = text.find("\n", i)
            i = n if nl < 0 else nl + 1
        elif text.startswith("/*", i):
            close = text.find("*/", i + 2)
            if close < 0:
                raise ParseError(path, text, i, "unterminated block comment")
            i = close + 2
        elif text.startswith('"""', i):
            close = i + 3
            while True:
                close = text.find('"""', close)
                if close < 0:
                    raise ParseError(path, text, i, "unterminated text block")
                if text[close - 1] != "\\":
                    break
                close += 1
            tokens.append(Token("string", text[i : close + 3], i, close + 3))
            i = close + 3
        elif c == '"' or c == "'":
            j = i + 1
            while j < n and text[j] != c and text[j] != "\n":
                j += 2 if text[j] == "\\" else 1
            if j >= n or text[j] != c:
                raise ParseError(path, text, i, "unterminated literal")
            tokens.append(Token("string" if c == '"' else "char", text[i : j + 1], i, j + 1))
            i = j + 1
        elif c.isalpha() or c in "_$":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] in "_$"):
                j += 1
            tokens.append(Token("ident", text[i:j], i, j))
            i = j
        elif c.isdigit():
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] in "._"):
                j += 1
            tokens.append(Token("number", text[i:j], i, j))
            i = j
        elif text.startswith("...", i):
            tokens.append(Token("sym", "...", i, i + 3))
            i += 3
        else:
            tokens.append(Token("sym", c, i, i + 1))
            i += 1
    return tokens


def check_braces(tokens: list[Token], text: str, path: str) -> None:
    stack: list[Token] = []
    for tok in tokens:
        if tok.kind != "sym":
            continue
        if tok.text == "{":
            stack.append(tok)
        elif tok.text == "}":
            if not stack:
                raise ParseError(path, text, tok.start, "unmatched '}'")
            stack.pop()
    if stack:
        raise ParseError(path, text, stack[-1].start, "unclosed '{'")
