"""Synthetic Polish-like fixtures for desk-scale runs.

Produces a word list, an error corpus (diacritic stripping plus
keyboard-neighbour typos over that list), word vectors in which each
error sits near its correction, and three-layer external stacks per
token.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from polspell.corpus import ErrorCase, save_corpus
from polspell.diacritics import POLISH
from polspell.embeddings import EmbeddingStore, save_embeddings

_ONSETS = [
    "", "b", "c", "ć", "d", "dz", "g", "h", "k", "l", "ł", "m", "n", "p", "r",
    "s", "ś", "t", "w", "z", "ż", "ź", "sz", "cz", "rz", "ch", "pr", "kr", "st", "gł",
]
_VOWELS = ["a", "ą", "e", "ę", "i", "o", "ó", "u", "y"]
_CODAS = ["", "", "", "k", "n", "ń", "ł", "s", "ś", "r", "ć", "t", "m", "ż"]

_KEYBOARD = ["qwertyuiop", "asdfghjkl", "zxcvbnm"]


def _neighbours() -> dict[str, str]:
    pos = {ch: (r, c) for r, row in enumerate(_KEYBOARD) for c, ch in enumerate(row)}
    out = {}
    for ch, (r, c) in pos.items():
        near = []
        for other, (r2, c2) in pos.items():
            if other != ch and abs(r - r2) <= 1 and abs(c - c2) <= 1:
                near.append(other)
        out[ch] = "".join(sorted(near))
    return out


KEY_NEIGHBOURS = _neighbours()


def generate_words(n: int, seed: int = 0, min_syllables: int = 2, max_syllables: int = 4) -> list[str]:
    rng = np.random.default_rng(seed)
    words: list[str] = []
    seen = set()
    attempts = 0
    while len(words) < n:
        attempts += 1
        if attempts > 1000 * (n + 10):
            raise RuntimeError(f"could not generate {n} distinct words")
        k = int(rng.integers(min_syllables, max_syllables + 1))
        word = "".join(
            _ONSETS[rng.integers(len(_ONSETS))]
            + _VOWELS[rng.integers(len(_VOWELS))]
            + _CODAS[rng.integers(len(_CODAS))]
            for _ in range(k)
        )
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def _typo(word: str, rng: np.random.Generator) -> str:
    kind = int(rng.integers(4))
    i = int(rng.integers(len(word)))
    ch = POLISH.strip(word[i])
    if kind == 0 and KEY_NEIGHBOURS.get(ch):
        near = KEY_NEIGHBOURS[ch]
        return word[:i] + near[rng.integers(len(near))] + word[i + 1:]
    if kind == 1 and len(word) > 3:
        return word[:i] + word[i + 1:]
    if kind == 2 and KEY_NEIGHBOURS.get(ch):
        near = KEY_NEIGHBOURS[ch]
        return word[:i] + near[rng.integers(len(near))] + word[i:]
    if len(word) > 1:
        j = min(i, len(word) - 2)
        return word[:j] + word[j + 1] + word[j] + word[j + 2:]
    return word


def make_error(word: str, rng: np.random.Generator, strip_prob: float = 0.5) -> str:
    """A misspelling of ``word``: diacritics dropped, or a single keyboard typo."""
    stripped = POLISH.strip(word)
    if stripped != word and rng.random() < strip_prob:
        return stripped
    return _typo(word, rng)


def generate_cases(words: list[str], n: int, seed: int = 0, distinct: bool = True) -> list[ErrorCase]:
    """Error/correction pairs whose errors are not themselves lexicon words."""
    rng = np.random.default_rng(seed)
    lexicon = set(words)
    cases = []
    seen = set()
    attempts = 0
    while len(cases) < n:
        attempts += 1
        if attempts > 1000 * (n + 10):
            raise RuntimeError(f"could not generate {n} error cases")
        word = words[int(rng.integers(len(words)))]
        error = make_error(word, rng)
        if error == word or error in lexicon or not error:
            continue
        case = ErrorCase(error, word)
        if distinct and case in seen:
            continue
        seen.add(case)
        cases.append(case)
    return cases


def generate_embeddings(
    words: list[str], cases: list[ErrorCase], dim: int = 16, seed: int = 0, noise: float = 0.35,
    oov_fraction: float = 0.1,
) -> EmbeddingStore:
    """Random word vectors; each error vector is its correction's plus noise.

    A fraction of error tokens is left without a vector to exercise the
    out-of-vocabulary fallback.
    """
    rng = np.random.default_rng(seed)
    vectors: dict[str, np.ndarray] = {}
    for word in words:
        vec = rng.normal(size=dim)
        vectors[word] = vec / np.linalg.norm(vec)
    for case in cases:
        if case.error in vectors or rng.random() < oov_fraction:
            continue
        vec = vectors[case.correction] + noise * rng.normal(size=dim) / np.sqrt(dim)
        vectors[case.error] = vec / np.linalg.norm(vec)
    return EmbeddingStore(vectors, dim)


def generate_layers(
    tokens: list[str], store: EmbeddingStore, dim: int = 8, layers: int = 3, seed: int = 0
) -> dict[str, np.ndarray]:
    """Per-token layer stacks: fixed random projections of the token's vector plus noise."""
    rng = np.random.default_rng(seed)
    proj = rng.normal(size=(layers, dim, store.dim)) / np.sqrt(store.dim)
    stacks = {}
    for token in tokens:
        if token in stacks:
            continue
        base = store.get(token)
        if base is None:
            base = rng.normal(size=store.dim) / np.sqrt(store.dim)
        stacks[token] = proj @ base + 0.1 * rng.normal(size=(layers, dim))
    return stacks


def save_layers(stacks: dict[str, np.ndarray], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for token, stack in stacks.items():
            for idx, row in enumerate(stack):
                fh.write(f"{token} {idx} " + " ".join(repr(float(x)) for x in row) + "\n")


@dataclass
class FixturePaths:
    lexicon: Path
    corpus: Path
    embeddings: Path
    layers: Path


def write_fixtures(
    out_dir: str | os.PathLike,
    n_words: int = 400,
    n_cases: int = 200,
    seed: int = 0,
    emb_dim: int = 16,
    layer_dim: int = 8,
) -> FixturePaths:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    words = generate_words(n_words, seed)
    cases = generate_cases(words, n_cases, seed + 1)
    store = generate_embeddings(words, cases, emb_dim, seed + 2)
    stacks = generate_layers([c.error for c in cases], store, layer_dim, seed=seed + 3)
    paths = FixturePaths(
        out / "lexicon.txt", out / "corpus.tsv", out / "embeddings.txt", out / "layers.txt"
    )
    with open(paths.lexicon, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# synthetic lexicon\n")
        fh.writelines(w + "\n" for w in words)
    save_corpus(cases, paths.corpus)
    save_embeddings(store, paths.embeddings)
    save_layers(stacks, paths.layers)
    return paths
