"""Isolated non-word spelling correction toolkit for Polish.

Five method families share one evaluation harness: dictionary edit
distance, diacritic swapping, combined edit/vector distance, and
character-level LSTM encoder-decoders (uni- and bidirectional, the
latter optionally initialized from external layer embeddings).
"""

from polspell.errors import ConfigError, LoadError
from polspell.lexicon import Lexicon, load_lexicon
from polspell.editdist import levenshtein, scaled_levenshtein

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "LoadError",
    "Lexicon",
    "load_lexicon",
    "levenshtein",
    "scaled_levenshtein",
]
