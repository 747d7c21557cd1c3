"""Uniform corrector interface and the evaluation driver."""

from __future__ import annotations

import logging
import math
import os
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from polspell.candidates import CorrectionCandidate
from polspell.corpus import ErrorCase, ErrorCorpus
from polspell.diacritics import diacritic_correct
from polspell.editdist import scaled_levenshtein
from polspell.embeddings import DEFAULT_MAX_EDIT, EmbeddingStore, load_embeddings, vector_distance_correct
from polspell.errors import ConfigError
from polspell.lexicon import Lexicon, load_lexicon
from polspell.metrics import EvalReport, accuracy, perplexity
from polspell.neural.io import external_layers_load, load_model
from polspell.neural.model import Seq2SeqModel, batch_loss, correct_token, lookup_layers

log = logging.getLogger(__name__)

METHODS = ("edit", "diacritic", "vector", "lstm1", "lstm2", "lstm-hook")
NEURAL_METHODS = ("lstm1", "lstm2", "lstm-hook")

# method -> (bidirectional, hook)
_NEURAL_SHAPE = {"lstm1": (False, False), "lstm2": (True, False), "lstm-hook": (True, True)}


@dataclass
class CorrectorSpec:
    method: str
    lexicon: str | os.PathLike | None = None
    embeddings: str | os.PathLike | None = None
    model: str | os.PathLike | None = None
    layers: str | os.PathLike | None = None
    max_edit: int = DEFAULT_MAX_EDIT
    edit_weight: float = 0.5
    skip_known: bool = False

    def required(self) -> list[str]:
        needs = {
            "edit": ["lexicon"],
            "diacritic": ["lexicon"],
            "vector": ["lexicon", "embeddings"],
            "lstm1": ["model"],
            "lstm2": ["model"],
            "lstm-hook": ["model", "layers"],
        }[self.method]
        if self.skip_known and "lexicon" not in needs:
            needs = ["lexicon"] + needs
        return needs

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.max_edit < 1:
            raise ConfigError("max_edit must be at least 1")
        if not 0.0 <= self.edit_weight <= 1.0:
            raise ConfigError("edit_weight must lie in [0, 1]")
        for name in self.required():
            path = getattr(self, name)
            if path is None:
                raise ConfigError(f"method {self.method!r} needs a {name} file")
            if not Path(path).is_file():
                raise ConfigError(f"{name} file not found: {path}")


class Corrector:
    """A method bound to its loaded, read-only resources."""

    def __init__(
        self,
        spec: CorrectorSpec,
        lexicon: Lexicon | None = None,
        embeddings: EmbeddingStore | None = None,
        model: Seq2SeqModel | None = None,
        layers: dict[str, np.ndarray] | None = None,
    ):
        self.spec = spec
        self.lexicon = lexicon
        self.embeddings = embeddings
        self.model = model
        self.layers = layers
        self.missing_layers = 0

    @property
    def method(self) -> str:
        return self.spec.method

    @property
    def is_neural(self) -> bool:
        return self.spec.method in NEURAL_METHODS

    def correct(self, token: str) -> list[CorrectionCandidate]:
        token = unicodedata.normalize("NFC", token)
        if self.spec.skip_known and self.lexicon is not None and self.lexicon.membership(token):
            return [CorrectionCandidate(token, 0.0, None, 0.0, "known", 0)]
        method = self.spec.method
        if method == "edit":
            return [
                CorrectionCandidate(word, scaled_levenshtein(token, word), None, float(d), "edit", d)
                for word, d in self.lexicon.fuzzy_search(token, self.spec.max_edit)
            ]
        if method == "diacritic":
            return diacritic_correct(token, self.lexicon)
        if method == "vector":
            return vector_distance_correct(
                token, self.lexicon, self.embeddings, self.spec.max_edit, self.spec.edit_weight
            )
        return self._neural(token)

    def _external(self, token: str):
        if self.model.hook is None:
            return None
        if self.layers is None or token not in self.layers:
            self.missing_layers += 1
        return lookup_layers(self.model, self.layers, [token])[0]

    def _neural(self, token: str) -> list[CorrectionCandidate]:
        if not token:
            return []
        form, probs = correct_token(self.model, token, self._external(token))
        if not form:
            return []
        nll = -math.fsum(math.log(max(p, 1e-300)) for p in probs) / len(probs)
        return [
            CorrectionCandidate(
                form, scaled_levenshtein(token, form), None, nll, self.method,
                char_probs=tuple(probs),
            )
        ]

    def gold_probabilities(self, cases: Sequence[ErrorCase], batch_size: int = 64) -> list[list[float]]:
        """Teacher-forced probabilities of each gold character (EOS included)."""
        if not self.is_neural:
            raise ValueError(f"{self.method} is not a probabilistic method")
        out = []
        for start in range(0, len(cases), batch_size):
            batch = cases[start:start + batch_size]
            errors = [c.error for c in batch]
            ext = None
            if self.model.hook is not None:
                ext = [self._external(e) for e in errors]
            _, gold, _ = batch_loss(self.model, errors, [c.correction for c in batch], ext)
            for k, case in enumerate(batch):
                n = len(case.correction) + 1
                out.append([float(x) for x in gold[:n, k]])
        return out


def load_corrector(spec: CorrectorSpec) -> Corrector:
    spec.validate()
    need = spec.required()
    lexicon = load_lexicon(spec.lexicon) if "lexicon" in need else None
    embeddings = load_embeddings(spec.embeddings) if "embeddings" in need else None
    model = layers = None
    if "model" in need:
        model = load_model(spec.model)
        bidirectional, hook = _NEURAL_SHAPE[spec.method]
        if model.bidirectional != bidirectional or (model.hook is not None) != hook:
            raise ConfigError(
                f"model {spec.model} is {model.mode}"
                f"{'+hook' if model.hook else ''}, which does not fit method {spec.method!r}"
            )
        if hook:
            layers = external_layers_load(spec.layers, model.hook.dim, model.hook.layers)
    return Corrector(spec, lexicon, embeddings, model, layers)


def correct(spec: CorrectorSpec | Corrector, token: str) -> list[CorrectionCandidate]:
    corrector = spec if isinstance(spec, Corrector) else load_corrector(spec)
    return corrector.correct(token)


@dataclass(frozen=True)
class Prediction:
    case_index: int
    error: str
    gold: str
    predicted: str | None

    @property
    def correct(self) -> bool:
        return self.predicted is not None and self.predicted == self.gold


def evaluate(
    corrector: Corrector, corpus: ErrorCorpus, jobs: int = 1
) -> tuple[EvalReport, list[Prediction]]:
    """Score the top candidate for every test case; neural methods also get loss/perplexity.

    Cases with no candidate count as wrong. The prediction list is in
    case-index order whatever the number of workers.
    """
    cases = corpus.indexed("test")
    if not cases:
        raise ConfigError("corpus has an empty test split")

    def top(item):
        idx, case = item
        found = corrector.correct(case.error)
        return Prediction(idx, case.error, case.correction, found[0].form if found else None)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            predictions = list(pool.map(top, cases))
    else:
        predictions = [top(item) for item in cases]

    report = EvalReport(
        corrector.method,
        accuracy([(p.predicted, p.gold) for p in predictions]),
        len(predictions),
    )
    if corrector.is_neural:
        probs = corrector.gold_probabilities([c for _, c in cases])
        report.perplexity = perplexity(probs)
        n_chars = sum(len(seq) for seq in probs)
        report.test_loss = -math.fsum(math.log(max(p, 1e-12)) for seq in probs for p in seq) / n_chars
        if corrector.model.loss_history:
            report.train_loss = corrector.model.loss_history[-1]
        if corrector.missing_layers:
            log.warning("%d tokens had no external layers; zeros used", corrector.missing_layers)
    return report, predictions


def write_predictions(predictions: Sequence[Prediction], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("case_index\terror\tgold\tpredicted\tcorrect\n")
        for p in predictions:
            fh.write(
                f"{p.case_index}\t{p.error}\t{p.gold}\t{p.predicted or ''}\t{int(p.correct)}\n"
            )
