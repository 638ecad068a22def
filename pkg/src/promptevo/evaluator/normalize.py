from __future__ import annotations

import re

DEFAULT_MAX_LEN = 400

_SUBSTITUTIONS = [
    # timestamps first: their hh:mm:ss would otherwise look like line:col
    (re.compile(r"\b\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:[.,]\d+)?(?:Z|[+-]\d{2}:?\d{2})?"), "<TIME>"),
    (re.compile(r"\b\d{1,2}:\d{2}:\d{2}(?:[.,]\d+)?\b"), "<TIME>"),
    (re.compile(r"(?<![\w.<>/\\])(?:[A-Za-z]:)?(?:[\\/][\w.$@+-]+){2,}"), "<PATH>"),
    (re.compile(r"\b0x[0-9a-fA-F]+\b"), "<HEX>"),
    (re.compile(r"(?<=\w)@[0-9a-fA-F]{4,}\b"), "@<HEX>"),
    (re.compile(r"((?:<PATH>|\.\w+)):\d+:\d+"), r"\1:<LINE>:<COL>"),
    (re.compile(r"((?:<PATH>|\.\w+)):\d+"), r"\1:<LINE>"),
    (re.compile(r"\b(line|Line|LINE)\s+\d+"), r"\1 <LINE>"),
    (re.compile(r"\b(column|col)\s+\d+"), r"\1 <COL>"),
]
_WS = re.compile(r"\s+")


def normalize_error(raw_error: str, max_len: int = DEFAULT_MAX_LEN) -> str:
    """Strip run-specific noise from an error message so equal failures compare equal.

    Paths, line/column numbers, hex addresses and object hashes, and
    timestamps become placeholder tokens; whitespace is collapsed and the
    result truncated to ``max_len`` characters. The function is idempotent.

    >>> normalize_error("at /home/u/A.java:42")
    'at <PATH>:<LINE>'
    """
    text = raw_error
    for pattern, repl in _SUBSTITUTIONS:
        text = pattern.sub(repl, text)
    text = _WS.sub(" ", text).strip()
    return text[:max_len].rstrip()
