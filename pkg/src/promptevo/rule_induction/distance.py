from __future__ import annotations

from typing import Iterable, Sequence


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit insert, delete and substitute costs.

    Bit-parallel formulation: the shorter string is a bit mask, and each
    character of the longer one updates a whole DP column at once.
    """
    if a == b:
        return 0
    # common prefix/suffix never change the distance
    start = 0
    while start < len(a) and start < len(b) and a[start] == b[start]:
        start += 1
    end_a, end_b = len(a), len(b)
    while end_a > start and end_b > start and a[end_a - 1] == b[end_b - 1]:
        end_a -= 1
        end_b -= 1
    a, b = a[start:end_a], b[start:end_b]
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    m = len(b)
    peq: dict[str, int] = {}
    for i, ch in enumerate(b):
        peq[ch] = peq.get(ch, 0) | (1 << i)
    mask = (1 << m) - 1
    top = 1 << (m - 1)
    pv, mv, score = mask, 0, m
    for ch in a:
        eq = peq.get(ch, 0)
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = mv | ~(xh | pv)
        mh = pv & xh
        if ph & top:
            score += 1
        elif mh & top:
            score -= 1
        ph = (ph << 1) | 1
        mh <<= 1
        pv = (mh | ~(xv | ph)) & mask
        mv = ph & xv & mask
    return score


def normalized_distance(a: str, b: str) -> float:
    """Edit distance over the longer length; two empty strings are identical."""
    longest = max(len(a), len(b))
    return edit_distance(a, b) / longest if longest else 0.0


def similarity(failure: str, handled: Iterable[str]) -> float:
    """Sampling factor for a cluster whose center has error text ``failure``.

    ``1 - max over h in handled of (1 - normalized_distance(failure, h))``,
    i.e. the normalized distance to the closest handled failure. It is 1.0
    when nothing has been handled yet and 0.0 when ``failure`` itself was
    already handled, so clusters resembling past work are drawn less often.
    """
    closest = 1.0
    for h in handled:
        closest = min(closest, normalized_distance(failure, h))
        if closest == 0.0:
            break
    return closest


def cluster_weights(sizes: Sequence[int], sims: Sequence[float]) -> list[float]:
    """``size_i * sim_i`` normalized to sum to 1; uniform if every product is 0."""
    if len(sizes) != len(sims) or not sizes:
        raise ValueError("sizes and similarities must be non-empty and aligned")
    raw = [s * w for s, w in zip(sizes, sims)]
    total = sum(raw)
    if total <= 0:
        return [1.0 / len(raw)] * len(raw)
    return [r / total for r in raw]


def mean_pairwise_edit_distance(texts: Sequence[str]) -> float:
    texts = list(texts)
    pairs = [(i, j) for i in range(len(texts)) for j in range(i + 1, len(texts))]
    if not pairs:
        return 0.0
    return sum(edit_distance(texts[i], texts[j]) for i, j in pairs) / len(pairs)
