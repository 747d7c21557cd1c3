"""Accuracy, perplexity and evaluation reports."""

from __future__ import annotations

import logging
import math
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


@dataclass
class EvalReport:
    method: str
    accuracy: float
    cases: int
    perplexity: float | None = None
    test_loss: float | None = None
    train_loss: float | None = None


def accuracy(predictions: Sequence[tuple[str | None, str]]) -> float:
    """Fraction of (predicted, gold) pairs equal after NFC; None never matches."""
    if not predictions:
        raise ValueError("accuracy of an empty prediction list")
    hits = sum(
        1
        for pred, gold in predictions
        if pred is not None
        and unicodedata.normalize("NFC", pred) == unicodedata.normalize("NFC", gold)
    )
    return hits / len(predictions)


def _log2_probs(probs: Iterable[float]) -> tuple[list[float], int]:
    logs = []
    clamped = 0
    for p in probs:
        p = float(p)
        if not 0.0 <= p <= 1.0 or math.isnan(p):
            raise ValueError(f"probability out of range: {p}")
        if p < PROB_FLOOR:
            p = PROB_FLOOR
            clamped += 1
        logs.append(math.log2(p))
    return logs, clamped


def cross_entropy_bits(probs: Sequence[float]) -> float:
    """Mean negative log2 probability per character."""
    if len(probs) == 0:
        raise ValueError("empty probability sequence")
    logs, _ = _log2_probs(probs)
    return -math.fsum(logs) / len(logs)


def token_perplexity(probs: Sequence[float]) -> float:
    if len(probs) == 0:
        raise ValueError("empty probability sequence")
    logs, clamped = _log2_probs(probs)
    if clamped:
        log.warning("clamped %d zero probabilities to %g", clamped, PROB_FLOOR)
    return 2.0 ** (-math.fsum(logs) / len(logs))


def perplexity(prob_seqs: Sequence[Sequence[float]]) -> float:
    """Mean over tokens of 2 ** (mean negative log2 P per character).

    Each inner sequence holds the probabilities assigned to the gold
    characters of one word, end-of-word symbol included.
    """
    if len(prob_seqs) == 0:
        raise ValueError("perplexity of an empty set")
    return math.fsum(token_perplexity(seq) for seq in prob_seqs) / len(prob_seqs)


def _fmt(value: float | None, digits: int = 4) -> str:
    if value is None:
        return "-"
    return f"{value:.{digits}f}"


REPORT_COLUMNS = ("method", "accuracy", "perplexity", "loss_train", "loss_test", "cases")


def _rows(reports: Iterable[EvalReport]) -> list[list[str]]:
    return [
        [
            r.method,
            _fmt(r.accuracy),
            _fmt(r.perplexity),
            _fmt(r.train_loss),
            _fmt(r.test_loss),
            str(r.cases),
        ]
        for r in reports
    ]


def format_table(reports: Iterable[EvalReport]) -> str:
    rows = [list(REPORT_COLUMNS)] + _rows(reports)
    widths = [max(len(row[k]) for row in rows) for k in range(len(REPORT_COLUMNS))]
    lines = []
    for row in rows:
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def format_tsv(reports: Iterable[EvalReport]) -> str:
    rows = [list(REPORT_COLUMNS)] + _rows(reports)
    return "".join("\t".join(row) + "\n" for row in rows)
