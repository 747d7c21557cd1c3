"""Error/correction pair corpora and deterministic train/dev/test splits."""

from __future__ import annotations

import math
import os
import unicodedata
from dataclasses import dataclass, field

import numpy as np

from polspell.errors import ConfigError, LoadError

SPLITS = ("train", "dev", "test")
DEFAULT_FRACTIONS = (0.70, 0.05, 0.25)


@dataclass(frozen=True)
class ErrorCase:
    error: str
    correction: str

    def __post_init__(self):
        if not self.error or not self.correction:
            raise ValueError("error and correction must be non-empty")
        if "\t" in self.error or "\t" in self.correction:
            raise ValueError("fields may not contain tabs")


@dataclass
class ErrorCorpus:
    """Ordered cases plus an optional split assignment (one label per case)."""

    cases: list[ErrorCase]
    assignment: list[str] | None = None
    seed: int | None = None
    fractions: tuple[float, float, float] | None = field(default=None)

    def __len__(self) -> int:
        return len(self.cases)

    def subset(self, name: str) -> list[ErrorCase]:
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}")
        if self.assignment is None:
            raise ValueError("corpus has not been split")
        return [c for c, a in zip(self.cases, self.assignment) if a == name]

    def indexed(self, name: str) -> list[tuple[int, ErrorCase]]:
        if self.assignment is None:
            raise ValueError("corpus has not been split")
        return [(i, c) for i, (c, a) in enumerate(zip(self.cases, self.assignment)) if a == name]

    @property
    def train(self) -> list[ErrorCase]:
        return self.subset("train")

    @property
    def dev(self) -> list[ErrorCase]:
        return self.subset("dev")

    @property
    def test(self) -> list[ErrorCase]:
        return self.subset("test")


def load_corpus(path: str | os.PathLike, dedup: bool = False) -> ErrorCorpus:
    """Read ``error<TAB>correction`` lines; ``#`` comments and blanks skipped."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise LoadError(f"cannot read corpus: {exc.strerror}", path) from exc
    cases = []
    seen = set()
    for lineno, raw in enumerate(data.split(b"\n"), 1):
        try:
            line = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LoadError(f"malformed UTF-8 ({exc.reason})", path, lineno) from exc
        if lineno == 1:
            line = line.lstrip("\ufeff")
        line = line.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise LoadError(f"expected 2 tab-separated columns, got {len(cols)}", path, lineno)
        error, correction = (unicodedata.normalize("NFC", c.strip()) for c in cols)
        if not error or not correction:
            raise LoadError("empty field", path, lineno)
        case = ErrorCase(error, correction)
        if dedup:
            if case in seen:
                continue
            seen.add(case)
        cases.append(case)
    return ErrorCorpus(cases)


def save_corpus(cases, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for case in cases:
            fh.write(f"{case.error}\t{case.correction}\n")


def _split_sizes(n: int, fractions) -> list[int]:
    # largest remainder: every size is within 1 of n * fraction
    exact = [f * n for f in fractions]
    sizes = [math.floor(x) for x in exact]
    short = n - sum(sizes)
    order = sorted(range(len(fractions)), key=lambda k: (-(exact[k] - sizes[k]), k))
    for k in order[:short]:
        sizes[k] += 1
    return sizes


def split(corpus: ErrorCorpus, fractions=DEFAULT_FRACTIONS, seed: int = 0) -> ErrorCorpus:
    """Assign each case to train/dev/test by a seeded permutation of case indices."""
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f < 0 or not math.isfinite(f) for f in fractions):
        raise ConfigError(f"split fractions must be three non-negative numbers: {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {sum(fractions)!r}")
    n = len(corpus.cases)
    sizes = _split_sizes(n, fractions)
    order = np.random.default_rng(seed).permutation(n)
    assignment = [""] * n
    start = 0
    for name, size in zip(SPLITS, sizes):
        for idx in order[start:start + size]:
            assignment[int(idx)] = name
        start += size
    return ErrorCorpus(list(corpus.cases), assignment, seed, fractions)
