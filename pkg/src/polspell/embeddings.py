"""Word vectors and the combined edit/cosine distance corrector."""

from __future__ import annotations

import logging
import os
import unicodedata

import numpy as np

from polspell.candidates import CorrectionCandidate
from polspell.editdist import scaled_levenshtein
from polspell.errors import LoadError
from polspell.lexicon import Lexicon

log = logging.getLogger(__name__)

DEFAULT_MAX_EDIT = 3


class EmbeddingStore:
    """Token to dense vector map with a fixed dimensionality."""

    def __init__(self, vectors: dict[str, np.ndarray], dim: int, duplicates: int = 0):
        if dim <= 0:
            raise ValueError("dim must be positive")
        for token, vec in vectors.items():
            if vec.shape != (dim,):
                raise ValueError(f"vector for {token!r} has shape {vec.shape}, expected ({dim},)")
            if not np.any(vec):
                raise ValueError(f"zero vector for {token!r}")
        self.dim = dim
        self.vectors = vectors
        self.duplicates = duplicates

    @property
    def vocab_size(self) -> int:
        return len(self.vectors)

    def __contains__(self, token: object) -> bool:
        return token in self.vectors

    def get(self, token: str) -> np.ndarray | None:
        return self.vectors.get(token)

    def scaled(self, factor: float) -> "EmbeddingStore":
        return EmbeddingStore({t: v * factor for t, v in self.vectors.items()}, self.dim)


def _is_header(fields: list[str]) -> bool:
    return len(fields) == 2 and all(f.isdigit() for f in fields)


def load_embeddings(path: str | os.PathLike) -> EmbeddingStore:
    """Load word2vec-style text vectors.

    An optional ``<count> <dim>`` header is detected from the first line's
    shape. Duplicate tokens keep the last vector.
    """
    try:
        fh = open(path, encoding="utf-8", newline=None)
    except OSError as exc:
        raise LoadError(f"cannot read embeddings: {exc.strerror}", path) from exc
    vectors: dict[str, np.ndarray] = {}
    dim = None
    duplicates = 0
    with fh:
        try:
            for lineno, line in enumerate(fh, 1):
                if lineno == 1:
                    line = line.lstrip("\ufeff")
                fields = line.split()
                if not fields:
                    continue
                if lineno == 1 and _is_header(fields):
                    dim = int(fields[1])
                    continue
                token = unicodedata.normalize("NFC", fields[0])
                values = fields[1:]
                if dim is None:
                    dim = len(values)
                if len(values) != dim or dim == 0:
                    raise LoadError(f"expected {dim} values, got {len(values)}", path, lineno)
                try:
                    vec = np.array([float(v) for v in values], dtype=np.float64)
                except ValueError as exc:
                    raise LoadError(f"bad number: {exc}", path, lineno) from exc
                if not np.all(np.isfinite(vec)):
                    raise LoadError("non-finite vector component", path, lineno)
                if not np.any(vec):
                    raise LoadError(f"zero vector for {token!r}", path, lineno)
                if token in vectors:
                    duplicates += 1
                vectors[token] = vec
        except UnicodeDecodeError as exc:
            raise LoadError(f"malformed UTF-8 ({exc.reason})", path) from exc
    if duplicates:
        log.warning("%s: %d duplicate tokens, last occurrence kept", path, duplicates)
    if dim is None:
        raise LoadError("no vectors found", path)
    return EmbeddingStore(vectors, dim, duplicates)


def save_embeddings(store: EmbeddingStore, path: str | os.PathLike, header: bool = True) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(f"{store.vocab_size} {store.dim}\n")
        for token, vec in store.vectors.items():
            fh.write(token + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), in [0, 2]. Zero-norm input raises ValueError."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine distance undefined for a zero vector")
    if np.array_equal(u, v):
        return 0.0
    cos = float(np.dot(u, v) / (nu * nv))
    return 1.0 - min(1.0, max(-1.0, cos))


def combined_distance(edit: float, semantic: float, edit_weight: float = 0.5) -> float:
    if edit_weight == 0.5:
        return (edit + semantic) / 2
    return edit_weight * edit + (1.0 - edit_weight) * semantic


def vector_distance_correct(
    token: str,
    lex: Lexicon,
    emb: EmbeddingStore,
    max_edit: int = DEFAULT_MAX_EDIT,
    edit_weight: float = 0.5,
) -> list[CorrectionCandidate]:
    """Rank lexicon words near ``token`` by mixed edit and cosine distance.

    Candidates come from a bounded fuzzy search. When ``token`` has no
    vector the ranking uses scaled edit distance alone, over the whole
    fuzzy pool, and candidates are tagged ``vector-fallback``.
    """
    if max_edit < 1:
        raise ValueError("max_edit must be at least 1")
    token = unicodedata.normalize("NFC", token)
    pool = lex.fuzzy_search(token, max_edit)
    own = emb.get(token)
    found = []
    if own is None:
        for word, d in pool:
            edit = scaled_levenshtein(token, word)
            found.append(CorrectionCandidate(word, edit, None, edit, "vector-fallback", d))
    else:
        for word, d in pool:
            vec = emb.get(word)
            if vec is None:
                continue
            edit = scaled_levenshtein(token, word)
            sem = cosine_distance(own, vec)
            found.append(
                CorrectionCandidate(
                    word, edit, sem, combined_distance(edit, sem, edit_weight), "vector", d
                )
            )
    found.sort(key=lambda c: (c.combined, c.form))
    return found
