"""Exit criteria. Each test carries an ``acceptance`` label that the
terminal summary reports as one PASS/FAIL line."""

import math
import random
import time

import numpy as np
import pytest

from oracles import all_strings, brute_force_search, levenshtein_table
from polspell.cli import run
from polspell.corpus import ErrorCase, ErrorCorpus
from polspell.diacritics import (
    MAX_TOKEN_LENGTH,
    POLISH,
    diacritic_correct,
    enumerate_variants,
    variant_count,
)
from polspell.editdist import levenshtein, scaled_levenshtein
from polspell.embeddings import combined_distance, cosine_distance, vector_distance_correct
from polspell.fixtures import generate_cases, generate_layers, generate_embeddings, generate_words
from polspell.lexicon import Lexicon
from polspell.metrics import cross_entropy_bits, perplexity, token_perplexity
from polspell.neural import (
    CharVocab,
    HookShape,
    Seq2SeqModel,
    TrainConfig,
    correct_token,
    gradient_check,
    train,
)
from polspell.pipeline import Corrector, CorrectorSpec, evaluate

acceptance = pytest.mark.acceptance

POLISH_LETTERS = "aąbcćdeęfghijklłmnńoóprsśtuwyzźżAĄCĆEĘLŁNŃOÓSŚZŹŻ"
LONG_TOKEN = "Modlin-Zegrze-Pultusk-Różan-Ostrołęka-Łomża-Osowiec"

# Option counts written out independently of the library's table.
_OPTION_COUNT = {ch: 2 for ch in "aąćcęełlńnóośsAĄĆCĘEŁLŃNÓOŚSżźŻŹ"}
_OPTION_COUNT.update({"z": 3, "Z": 3})


def analytic_count(token: str) -> int:
    return math.prod(_OPTION_COUNT.get(ch, 1) for ch in token)


@acceptance("1 BK-tree fuzzy search equals brute-force scan")
def test_bktree_oracle_equivalence():
    start = time.perf_counter()
    rng = random.Random(20)
    trials = mismatches = 0
    for _ in range(20):
        size = rng.randint(50, 2000)
        words = {"".join(rng.choices("abcdeł", k=rng.randint(1, 8))) for _ in range(size)}
        lex = Lexicon(words)
        for _ in range(10):
            token = "".join(rng.choices("abcdełx", k=rng.randint(0, 9)))
            max_dist = rng.randint(0, 3)
            if lex.fuzzy_search(token, max_dist) != brute_force_search(words, token, max_dist, levenshtein):
                mismatches += 1
            trials += 1
    assert trials >= 200
    assert mismatches == 0
    assert time.perf_counter() - start < 30


@acceptance("2 DP edit distance equals recursive oracle on all pairs up to length 6")
def test_edit_distance_exhaustive():
    strings = all_strings("abcd", 6)
    expected = levenshtein_table(strings)
    mismatches = 0
    for k, a in enumerate(strings):
        row = np.fromiter((levenshtein(a, b) for b in strings), dtype=np.int8, count=len(strings))
        mismatches += int(np.count_nonzero(row != expected[k]))
    assert len(strings) ** 2 == 5461 ** 2
    assert mismatches == 0


@acceptance("3 diacritic enumeration count, long-token count, length guard")
def test_diacritic_enumeration():
    rng = random.Random(3)
    checked = 0
    while checked < 1000:
        token = "".join(rng.choices(POLISH_LETTERS + "xyq", k=rng.randint(1, 16)))
        count = analytic_count(token)
        if count > 10**5:
            continue
        variants = list(enumerate_variants(token))
        assert len(variants) == len(set(variants)) == count == variant_count(token)
        checked += 1
    assert variant_count(LONG_TOKEN) > 2**29
    assert variant_count(LONG_TOKEN) == analytic_count(LONG_TOKEN)
    lex = Lexicon(["żółwżółwżółwżółwż", "zolwzolwzolwzolw"])
    assert diacritic_correct("zolwzolwzolwzolwz", lex) == []
    assert len("zolwzolwzolwzolwz") == MAX_TOKEN_LENGTH
    assert diacritic_correct(LONG_TOKEN, Lexicon([LONG_TOKEN])) == []
    assert [c.form for c in diacritic_correct("zolwzolwzolwzolw", lex)] == ["zolwzolwzolwzolw"]


@acceptance("4 diacritic restoration on 500 stripped words scores 1.0")
def test_restoration_completeness():
    words = generate_words(6000, seed=4)
    buckets = {}
    for w in words:
        buckets.setdefault(POLISH.strip(w), []).append(w)
    unique = [w for w in words if POLISH.strip(w) != w and len(buckets[POLISH.strip(w)]) == 1]
    chosen = [w for w in unique if len(w) < MAX_TOKEN_LENGTH][:500]
    assert len(chosen) == 500
    cases = [ErrorCase(POLISH.strip(w), w) for w in chosen]
    corpus = ErrorCorpus(cases, assignment=["test"] * len(cases))
    report, _ = evaluate(Corrector(CorrectorSpec("diacritic"), lexicon=Lexicon(words)), corpus)
    assert report.cases == 500
    assert report.accuracy == 1.0


@acceptance("5 combined distance is zero on identity and ranking survives scaling by 7.3")
def test_combined_distance_properties():
    words = generate_words(600, seed=5)
    cases = generate_cases(words, 300, seed=6)
    store = generate_embeddings(words, cases, dim=12, seed=7, oov_fraction=0.0)
    lex = Lexicon(words)
    scaled = store.scaled(7.3)
    rng = random.Random(5)
    for token in rng.sample(words, 100):
        d = combined_distance(scaled_levenshtein(token, token), cosine_distance(store.get(token), store.get(token)))
        assert d == 0.0
        top = vector_distance_correct(token, lex, store)[0]
        assert (top.form, top.combined) == (token, 0.0)
    queries = rng.sample(words, 50) + [c.error for c in rng.sample(cases, 50)]
    for token in queries:
        before = [c.form for c in vector_distance_correct(token, lex, store)]
        after = [c.form for c in vector_distance_correct(token, lex, scaled)]
        assert before == after


@acceptance("6 analytic gradients match central differences for uni, bi, bi+hook")
def test_gradient_check():
    start = time.perf_counter()
    vocab = CharVocab.from_texts(["abcłó"])
    configs = {"uni": (False, None), "bi": (True, None), "bi+hook": (True, HookShape(3, 3))}
    worst = {}
    for name, (bidirectional, hook) in configs.items():
        worst[name] = 0.0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            model = Seq2SeqModel.create(vocab, 8, 4, bidirectional, hook, seed)
            chars = list("abcłó")
            sample = tuple("".join(rng.choice(chars, int(rng.integers(1, 5)))) for _ in range(2))
            ext = rng.normal(size=(3, 3)) if hook else None
            worst[name] = max(worst[name], gradient_check(model, sample, ext, eps=1e-4))
    print("max relative error", worst)
    assert all(v < 1e-4 for v in worst.values())
    assert time.perf_counter() - start < 120


@acceptance("7 50-pair memorization at H=128 over 35 epochs")
def test_memorization():
    start = time.perf_counter()
    words = generate_words(200, seed=7)
    cases = generate_cases(words, 50, seed=8)
    store = generate_embeddings(words, cases, dim=8, seed=9)
    stacks = generate_layers([c.error for c in cases], store, dim=6, seed=10)
    vocab = CharVocab.from_texts(t for c in cases for t in (c.error, c.correction))
    cfg = TrainConfig(epochs=35, hidden=128, batch_size=4, lr=0.01, seed=0)
    for bidirectional, hook in ((False, None), (True, None), (True, HookShape(3, 6))):
        model = Seq2SeqModel.create(vocab, cfg.hidden, cfg.embed, bidirectional, hook, seed=0)
        layers = stacks if hook else None
        model, history = train(model, cases, cfg, layers)
        assert len(history) == 35
        assert all(b <= a + 0.05 for a, b in zip(history, history[1:])), history
        hits = sum(
            correct_token(model, c.error, stacks[c.error] if hook else None)[0] == c.correction
            for c in cases
        )
        assert hits / len(cases) == 1.0, (model.mode, hook, hits)
    assert time.perf_counter() - start < 300


@acceptance("8 perplexity analytics and cross-entropy consistency")
def test_perplexity_analytics():
    halves = [[0.5] * n for n in (1, 2, 5, 17)]
    assert abs(perplexity(halves) - 2.0) <= 1e-9
    assert perplexity([[1.0] * n for n in (1, 3, 8)]) == 1.0
    rng = np.random.default_rng(8)
    for _ in range(100):
        probs = list(rng.uniform(1e-4, 1.0, size=int(rng.integers(1, 30))))
        assert abs(token_perplexity(probs) - 2 ** cross_entropy_bits(probs)) <= 1e-9 * token_perplexity(probs)


def _cli(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    assert code == 0, err
    return out


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixtures")
    assert run(["gen-fixtures", "--out", str(out), "--words", "150", "--cases", "80", "--seed", "1"]) == 0
    return out


def _train_args(fx, method, out, extra=()):
    args = ["train", "--method", method, "--corpus", fx / "corpus.tsv", "--out", out,
            "--hidden", 16, "--embed", 8, "--epochs", 3, "--batch-size", 8, "--lr", 0.01, "--seed", 5]
    if method == "lstm-hook":
        args += ["--layers", fx / "layers.txt"]
    return args + list(extra)


@acceptance("9 train and evaluate are byte-identical across repeat runs")
def test_determinism(capsys, fixture_dir, tmp_path):
    fx = fixture_dir
    outputs = []
    for run_dir in (tmp_path / "one", tmp_path / "two"):
        run_dir.mkdir()
        model = run_dir / "hook.bin"
        echoed = _cli(capsys, *_train_args(fx, "lstm-hook", model))
        report = _cli(capsys, "evaluate", "--method", "lstm-hook", "--corpus", fx / "corpus.tsv",
                      "--model", model, "--layers", fx / "layers.txt", "--seed", 5, "--format", "tsv")
        outputs.append(((run_dir / "hook.bin.loss.tsv").read_bytes(), model.read_bytes(), echoed, report))
    assert outputs[0] == outputs[1]


@acceptance("10 six-method report shape and three echoed layer weights")
def test_report_shape(capsys, fixture_dir, tmp_path):
    fx = fixture_dir
    models = {}
    for method in ("lstm1", "lstm2", "lstm-hook"):
        models[method] = tmp_path / f"{method}.bin"
        echoed = _cli(capsys, *_train_args(fx, method, models[method]))
        if method == "lstm-hook":
            header, values = echoed.splitlines()
            assert header.split("\t") == ["layer_1", "layer_2", "layer_3"]
            assert len([float(v) for v in values.split("\t")]) == 3
        else:
            assert echoed == ""
    report = _cli(
        capsys, "evaluate", "--method", "all", "--corpus", fx / "corpus.tsv",
        "--lexicon", fx / "lexicon.txt", "--embeddings", fx / "embeddings.txt",
        "--layers", fx / "layers.txt", "--lstm1-model", models["lstm1"],
        "--lstm2-model", models["lstm2"], "--lstm-hook-model", models["lstm-hook"],
        "--format", "tsv",
    )
    header, *rows = [line.split("\t") for line in report.splitlines()]
    assert header == ["method", "accuracy", "perplexity", "loss_train", "loss_test", "cases"]
    assert [r[0] for r in rows] == ["edit", "diacritic", "vector", "lstm1", "lstm2", "lstm-hook"]
    for method, acc, ppl, loss_train, loss_test, cases in rows:
        assert 0.0 <= float(acc) <= 1.0
        assert int(cases) == 20
        neural = method.startswith("lstm")
        for value in (ppl, loss_train, loss_test):
            assert (value != "-") == neural
        if neural:
            assert float(ppl) >= 1.0
