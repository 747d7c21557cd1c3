"""Diacritic swapping: add or remove Polish diacritic marks.

Each letter maps to the set of letters reachable by adding or removing a
mark. ``z`` can gain either mark (``ż``, ``ź``) but ``ż`` and ``ź`` only
lose theirs, so the relation is not a full equivalence class for z.
"""

from __future__ import annotations

import itertools
import math
import unicodedata
import weakref
from typing import Iterator, Mapping

from polspell.candidates import CorrectionCandidate
from polspell.editdist import levenshtein, scaled_levenshtein
from polspell.lexicon import Lexicon

MAX_TOKEN_LENGTH = 17  # tokens this long or longer are not swapped

_PAIRS = [
    ("a", "ą"), ("c", "ć"), ("e", "ę"), ("l", "ł"), ("n", "ń"),
    ("o", "ó"), ("s", "ś"), ("z", "ż"), ("z", "ź"),
]


class DiacriticTable:
    """Per-character option sets; untabled characters map to themselves.

    Built from ``(plain, marked)`` letter pairs; uppercase counterparts
    are added automatically.
    """

    def __init__(self, pairs):
        options: dict[str, list[str]] = {}
        base: dict[str, str] = {}
        for plain, marked in pairs:
            for lo, hi in ((plain, marked), (plain.upper(), marked.upper())):
                options.setdefault(lo, [lo]).append(hi)
                options.setdefault(hi, [hi]).append(lo)
                base[hi] = lo
        self._options = {ch: tuple(opts) for ch, opts in options.items()}
        self._base = base

    def options(self, ch: str) -> tuple[str, ...]:
        return self._options.get(ch, (ch,))

    def strip(self, token: str) -> str:
        """Replace every marked letter by its unmarked form."""
        return "".join(self._base.get(ch, ch) for ch in token)


POLISH = DiacriticTable(_PAIRS)


def variant_count(token: str, table: DiacriticTable = POLISH) -> int:
    return math.prod(len(table.options(ch)) for ch in token)


def enumerate_variants(token: str, table: DiacriticTable = POLISH) -> Iterator[str]:
    """Yield every diacritic variant of ``token`` once, the token itself first."""
    for combo in itertools.product(*(table.options(ch) for ch in token)):
        yield "".join(combo)


def is_variant(candidate: str, token: str, table: DiacriticTable = POLISH) -> bool:
    return len(candidate) == len(token) and all(
        c in table.options(t) for c, t in zip(candidate, token)
    )


_indexes: "weakref.WeakKeyDictionary[Lexicon, dict]" = weakref.WeakKeyDictionary()


def _stripped_index(lex: Lexicon, table: DiacriticTable) -> dict[str, list[str]]:
    per_lex = _indexes.setdefault(lex, {})
    index = per_lex.get(id(table))
    if index is None:
        index = {}
        for word in lex:
            index.setdefault(table.strip(word), []).append(word)
        per_lex[id(table)] = index
    return index


def diacritic_correct(
    token: str, lex: Lexicon, table: DiacriticTable = POLISH
) -> list[CorrectionCandidate]:
    """Lexicon members among the diacritic variants of ``token``, closest first.

    Rather than materializing up to 3**16 variants, lexicon words are
    bucketed by their stripped form; a bucket holds exactly the words that
    could be variants, and each is checked position by position.
    """
    token = unicodedata.normalize("NFC", token)
    if len(token) >= MAX_TOKEN_LENGTH:
        return []
    bucket = _stripped_index(lex, table).get(table.strip(token), ())
    found = []
    for word in bucket:
        if is_variant(word, token, table):
            d = levenshtein(token, word)
            found.append(
                CorrectionCandidate(
                    form=word,
                    edit_score=scaled_levenshtein(token, word),
                    semantic_score=None,
                    combined=float(d),
                    source="diacritic",
                    distance=d,
                )
            )
    found.sort(key=lambda c: (c.distance, c.form))
    return found
