"""Reference vocabulary with exact lookup and BK-tree fuzzy search."""

from __future__ import annotations

import os
import unicodedata
from typing import Iterable

from polspell.editdist import levenshtein
from polspell.errors import LoadError


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


class _Node:
    __slots__ = ("word", "children")

    def __init__(self, word: str):
        self.word = word
        self.children: dict[int, _Node] = {}


class BKTree:
    """Burkhard-Keller tree keyed by unweighted Levenshtein distance."""

    def __init__(self, words: Iterable[str] = ()):
        self.root: _Node | None = None
        for word in words:
            self.add(word)

    def add(self, word: str) -> None:
        if self.root is None:
            self.root = _Node(word)
            return
        node = self.root
        while True:
            d = levenshtein(word, node.word)
            if d == 0:
                return
            child = node.children.get(d)
            if child is None:
                node.children[d] = _Node(word)
                return
            node = child

    def search(self, query: str, max_dist: int) -> list[tuple[str, int]]:
        if self.root is None:
            return []
        found = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            d = levenshtein(query, node.word)
            if d <= max_dist:
                found.append((node.word, d))
            lo, hi = d - max_dist, d + max_dist
            for key, child in node.children.items():
                if lo <= key <= hi:
                    stack.append(child)
        return found


class Lexicon:
    """Immutable set of NFC-normalized word forms.

    Membership is exact and case-sensitive. Fuzzy queries return
    ``(word, distance)`` pairs sorted by distance, then by code point.
    """

    def __init__(self, words: Iterable[str] = ()):
        entries = []
        seen = set()
        for raw in words:
            word = nfc(raw)
            if not word or any(ch.isspace() for ch in word):
                raise ValueError(f"invalid lexicon entry: {raw!r}")
            if word not in seen:
                seen.add(word)
                entries.append(word)
        self._entries = frozenset(entries)
        # Insertion order (not set order) keeps the tree shape reproducible.
        self._index = BKTree(entries)

    @property
    def entries(self) -> frozenset[str]:
        return self._entries

    @property
    def size(self) -> int:
        return len(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, token: object) -> bool:
        return isinstance(token, str) and self.membership(token)

    def __iter__(self):
        return iter(sorted(self._entries))

    def membership(self, token: str) -> bool:
        return nfc(token) in self._entries

    def fuzzy_search(self, token: str, max_dist: int) -> list[tuple[str, int]]:
        if max_dist < 0:
            raise ValueError("max_dist must be non-negative")
        hits = self._index.search(nfc(token), max_dist)
        hits.sort(key=lambda hit: (hit[1], hit[0]))
        return hits


def load_lexicon(path: str | os.PathLike) -> Lexicon:
    """Read a UTF-8 word list: one form per line, ``#`` comments, blanks skipped."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise LoadError(f"cannot read lexicon: {exc.strerror}", path) from exc
    words = []
    for lineno, raw in enumerate(data.split(b"\n"), 1):
        try:
            line = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LoadError(f"malformed UTF-8 ({exc.reason})", path, lineno) from exc
        if lineno == 1:
            line = line.lstrip("\ufeff")
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if any(ch.isspace() for ch in line):
            raise LoadError(f"entry contains whitespace: {line!r}", path, lineno)
        words.append(line)
    return Lexicon(words)
