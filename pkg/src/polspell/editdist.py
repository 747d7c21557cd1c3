"""Unit-cost Levenshtein distance over Unicode code points."""

from __future__ import annotations


def levenshtein(a: str, b: str) -> int:
    """Insertions, deletions and substitutions each cost 1; no transpositions."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        append = current.append
        for j, cb in enumerate(b, 1):
            cost = previous[j - 1] + (ca != cb)
            ins = current[j - 1] + 1
            dele = previous[j] + 1
            if ins < cost:
                cost = ins
            if dele < cost:
                cost = dele
            append(cost)
        previous = current
    return previous[-1]


def scaled_levenshtein(a: str, b: str) -> float:
    """Levenshtein distance divided by the longer operand's length.

    Two empty strings are at distance 0.0.
    """
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest
