from __future__ import annotations

import re

_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
_START = re.compile(r"^\s*(import\s|package\s|@\w|((public|final|abstract|private|protected|static)\s+)*(class|interface|enum)\s)")


class ExtractionError(ValueError):
    pass


def extract_test_code(llm_output: str) -> str:
    """Pull the test source out of a model reply.

    The first fenced code block wins. Without fences, the longest run of
    lines that starts at an import, package, annotation or class line and
    ends where its braces balance is taken.
    """
    fenced = _FENCE.search(llm_output)
    if fenced:
        code = fenced.group(1).strip()
        if code:
            return code
    lines = llm_output.splitlines()
    best = ""
    for i, line in enumerate(lines):
        if not _START.match(line):
            continue
        depth, opened = 0, False
        for j in range(i, len(lines)):
            depth += lines[j].count("{") - lines[j].count("}")
            opened = opened or "{" in lines[j]
            if opened and depth <= 0:
                region = "\n".join(lines[i : j + 1]).strip()
                if depth == 0 and len(region) > len(best):
                    best = region
                break
    if not best:
        raise ExtractionError("no test code found in model output")
    return best
