"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or resource error. Only
results go to standard output; diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from polspell import corpus as corpus_mod
from polspell.diacritics import enumerate_variants, variant_count
from polspell.errors import ConfigError, LoadError
from polspell.fixtures import write_fixtures
from polspell.metrics import format_table, format_tsv
from polspell.neural.io import external_layers_load, save_model
from polspell.neural.model import HookShape, Seq2SeqModel
from polspell.neural.train import TrainConfig, TrainingError, train
from polspell.neural.vocab import CharVocab
from polspell.pipeline import (
    METHODS,
    NEURAL_METHODS,
    CorrectorSpec,
    evaluate,
    load_corrector,
    write_predictions,
)

log = logging.getLogger("polspell")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fractions(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated fractions")
    return parts


def _add_resources(p):
    p.add_argument("--lexicon", help="word list, one form per line")
    p.add_argument("--embeddings", help="word2vec-style text vectors")
    p.add_argument("--model", help="trained neural model file")
    p.add_argument("--layers", help="external layer stacks for the init hook")
    p.add_argument("--max-edit", type=int, default=3, help="fuzzy search radius (default 3)")
    p.add_argument("--edit-weight", type=float, default=0.5,
                   help="weight of scaled edit distance in the vector method (default 0.5)")


def _add_corpus(p):
    p.add_argument("--corpus", help="TSV of error<TAB>correction pairs")
    p.add_argument("--split", type=_fractions, default=corpus_mod.DEFAULT_FRACTIONS,
                   help="train,dev,test fractions (default 0.70,0.05,0.25)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dedup", action="store_true", help="drop repeated pairs")


def build_parser() -> _Parser:
    parser = _Parser(prog="polspell", description="Isolated non-word spelling correction.")
    parser.add_argument("--config", help="key = value file; explicit flags override it")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("correct", help="correct tokens (argument or one per stdin line)")
    p.add_argument("token", nargs="?")
    p.add_argument("--method", choices=METHODS, default="edit")
    _add_resources(p)
    p.add_argument("-k", "--top", type=int, default=5, help="candidates to print (default 5)")
    p.add_argument("--skip-known", action="store_true",
                   help="return lexicon members unchanged")

    p = sub.add_parser("evaluate", help="score methods on a corpus test split")
    p.add_argument("--method", default="all",
                   help="comma-separated methods or 'all' (default all)")
    _add_resources(p)
    for m in NEURAL_METHODS:
        p.add_argument(f"--{m}-model", help=f"model file for {m}")
    _add_corpus(p)
    p.add_argument("--format", choices=("table", "tsv"), default="table")
    p.add_argument("--predictions", help="per-case log TSV (suffixed by method when several)")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("train", help="train a neural corrector")
    p.add_argument("--method", choices=NEURAL_METHODS, default="lstm1")
    _add_corpus(p)
    p.add_argument("--layers", help="external layer stacks (lstm-hook)")
    p.add_argument("--out", help="model file to write")
    p.add_argument("--history", help="loss history TSV (default: <out>.loss.tsv)")
    defaults = TrainConfig()
    p.add_argument("--epochs", type=int, default=defaults.epochs)
    p.add_argument("--hidden", type=int, default=defaults.hidden)
    p.add_argument("--embed", type=int, default=defaults.embed)
    p.add_argument("--lr", type=float, default=defaults.lr)
    p.add_argument("--batch-size", type=int, default=defaults.batch_size)
    p.add_argument("--objective", choices=("separate", "mixture"), default=defaults.objective)

    p = sub.add_parser("swap-variants", help="count and list diacritic variants")
    p.add_argument("token")
    p.add_argument("--limit", type=int, default=1000,
                   help="list variants only when there are at most this many")

    p = sub.add_parser("gen-fixtures", help="write a synthetic lexicon/corpus/vectors/layers set")
    p.add_argument("--out", default="fixtures")
    p.add_argument("--words", type=int, default=400)
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emb-dim", type=int, default=16)
    p.add_argument("--layer-dim", type=int, default=8)
    return parser


def read_config(path: str) -> dict[str, str]:
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}")
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config(parser: _Parser, argv: list[str], config: dict[str, str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in config.items():
        action = actions.get(key)
        if action is None or key in ("help", "token"):
            raise UsageError(f"config key {key!r} is not an option of {args.command!r}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                defaults[key] = action.type(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config key {key!r}: {exc}")
        else:
            defaults[key] = raw
        if action.choices is not None and defaults[key] not in action.choices:
            raise UsageError(f"config key {key!r}: invalid choice {raw!r}")
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _score(value: float) -> str:
    return repr(round(value, 6))


def cmd_correct(args) -> int:
    spec = CorrectorSpec(args.method, args.lexicon, args.embeddings, args.model, args.layers,
                         args.max_edit, args.edit_weight, args.skip_known)
    corrector = load_corrector(spec)
    k = 1 if spec.method in NEURAL_METHODS else args.top
    out = sys.stdout
    if args.token is not None:
        for cand in corrector.correct(args.token)[:k]:
            out.write(f"{cand.form} {_score(cand.combined)}\n")
        return 0
    for line in sys.stdin:
        token = line.strip()
        if not token:
            continue
        for cand in corrector.correct(token)[:k]:
            out.write(f"{token}\t{cand.form}\t{_score(cand.combined)}\n")
    return 0


def _split_corpus(args):
    loaded = corpus_mod.load_corpus(args.corpus, dedup=args.dedup)
    return corpus_mod.split(loaded, args.split, args.seed)


def cmd_evaluate(args) -> int:
    if args.corpus is None:
        raise UsageError("evaluate: --corpus is required")
    methods = list(METHODS) if args.method == "all" else args.method.split(",")
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"evaluate: unknown method {m!r}")
    specs = []
    for m in methods:
        model = getattr(args, f"{m.replace('-', '_')}_model", None) if m in NEURAL_METHODS else None
        specs.append(CorrectorSpec(m, args.lexicon, args.embeddings, model or args.model,
                                   args.layers, args.max_edit, args.edit_weight))
    for spec in specs:
        spec.validate()
    data = _split_corpus(args)
    reports = []
    for spec in specs:
        report, predictions = evaluate(load_corrector(spec), data, jobs=args.jobs)
        reports.append(report)
        if args.predictions:
            path = Path(args.predictions)
            if len(specs) > 1:
                path = path.with_name(f"{path.stem}.{spec.method}{path.suffix}")
            write_predictions(predictions, path)
    sys.stdout.write(format_table(reports) if args.format == "table" else format_tsv(reports))
    return 0


def cmd_train(args) -> int:
    if args.corpus is None or args.out is None:
        raise UsageError("train: --corpus and --out are required")
    hook = args.method == "lstm-hook"
    if hook and args.layers is None:
        raise UsageError("train: lstm-hook needs --layers")
    try:
        cfg = TrainConfig(epochs=args.epochs, lr=args.lr, batch_size=args.batch_size,
                          seed=args.seed, hidden=args.hidden, embed=args.embed,
                          objective=args.objective)
    except ValueError as exc:
        raise UsageError(f"train: {exc}")
    data = _split_corpus(args)
    cases = data.train
    if not cases:
        raise ConfigError("training split is empty")
    layers = None
    shape = None
    if hook:
        layers = external_layers_load(args.layers)
        dim = next(iter(layers.values())).shape[1] if layers else 1
        shape = HookShape(3, dim)
    vocab = CharVocab.from_texts(t for c in cases for t in (c.error, c.correction))
    model = Seq2SeqModel.create(vocab, cfg.hidden, cfg.embed, args.method != "lstm1", shape, cfg.seed)
    model, history = train(model, cases, cfg, layers)
    save_model(model, args.out)
    history_path = args.history or f"{args.out}.loss.tsv"
    with open(history_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch\tloss\n")
        for epoch, loss in enumerate(history, 1):
            fh.write(f"{epoch}\t{loss!r}\n")
    log.info("trained %s on %d cases; final loss %.6f", args.method, len(cases), history[-1])
    weights = model.layer_weights()
    if weights is not None:
        sys.stdout.write("\t".join(f"layer_{i}" for i in range(1, len(weights) + 1)) + "\n")
        sys.stdout.write("\t".join(f"{w:.6f}" for w in weights) + "\n")
    return 0


def cmd_swap_variants(args) -> int:
    count = variant_count(args.token)
    sys.stdout.write(f"{count}\n")
    if count <= args.limit:
        for variant in enumerate_variants(args.token):
            sys.stdout.write(variant + "\n")
    return 0


def cmd_gen_fixtures(args) -> int:
    paths = write_fixtures(args.out, args.words, args.cases, args.seed, args.emb_dim, args.layer_dim)
    for path in (paths.lexicon, paths.corpus, paths.embeddings, paths.layers):
        sys.stdout.write(f"{path}\n")
    return 0


COMMANDS = {
    "correct": cmd_correct,
    "evaluate": cmd_evaluate,
    "train": cmd_train,
    "swap-variants": cmd_swap_variants,
    "gen-fixtures": cmd_gen_fixtures,
}


def _setup_logging(verbosity: int) -> None:
    # rebinding per run keeps repeated in-process calls on the current stderr
    for handler in list(log.handlers):
        log.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.WARNING - 10 * min(verbosity, 2))
    log.propagate = False


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        if args.config:
            args = _apply_config(parser, argv, read_config(args.config))
        _setup_logging(args.verbose)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except (ConfigError, LoadError, TrainingError, OSError) as exc:
        sys.stderr.write(f"polspell: error: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
