"""Scored correction proposals shared by all correctors."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CorrectionCandidate:
    """One proposed correction.

    ``combined`` is the ranking key (lower is better). ``distance`` holds
    the raw edit distance where a method computes one; ``char_probs``
    holds per-step probabilities for neural output.
    """

    form: str
    edit_score: float
    semantic_score: float | None
    combined: float
    source: str
    distance: int | None = None
    char_probs: tuple[float, ...] | None = None
