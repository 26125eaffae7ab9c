"""Command-line interface.

Subcommands: train, predict, evaluate, xval, selfcheck. Exit codes:
0 success, 1 usage error, 2 data/file error, 3 numeric selfcheck
failure. Every subcommand is deterministic given its inputs and seed,
and none mutates its input files.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import __version__
from .corpus import (
    AnnotationError,
    Dataset,
    EmbeddingFormatError,
    emit_annotations,
    fold_manifest,
    make_folds,
    parse_annotations,
)
from .evaluation import length_breakdown_rows, metrics_report
from .model import load_checkpoint, save_checkpoint
from .selfcheck import run_selfcheck
from .training import (
    LatticeCache,
    TrainConfig,
    cross_validate,
    load_config,
    predict_spans,
    train,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SELFCHECK = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _read(path):
    with open(path, encoding="utf-8") as handle:
        return handle.read()


def _write(path, text):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def _load_train_config(args):
    config = load_config(args.config) if args.config else TrainConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def cmd_train(args):
    config = _load_train_config(args)
    train_set = parse_annotations(_read(args.train_file))
    dev_set = parse_annotations(_read(args.dev_file)) if args.dev_file else None
    model, report = train(train_set, config, dev=dev_set)
    save_checkpoint(model, args.model_out)
    report_path = args.report_out or args.model_out + ".report"
    _write(report_path, str(report))
    sys.stdout.write(str(report))
    log.info("checkpoint written to %s, report to %s", args.model_out, report_path)
    return EXIT_OK


def cmd_predict(args):
    model = load_checkpoint(args.model_in)
    if args.config:
        config = load_config(args.config)
        mc = model.config
        mismatches = [
            name
            for name, got, want in (
                ("char_dim", mc.char_dim, config.char_dim),
                ("hidden_dim", mc.hidden_dim, config.hidden_dim),
                ("attn_dim", mc.attn_dim, config.attn_dim),
                ("lstm_layers", mc.lstm_layers, config.lstm_layers),
                ("ablation", mc.ablation, config.ablation),
            )
            if got != want
        ]
        if mismatches:
            raise ValueError(
                "checkpoint does not match --config on: " + ", ".join(mismatches)
            )
    data = parse_annotations(_read(args.input_file), allow_untagged=True)
    cache = LatticeCache()
    predicted = [
        (sentence, tuple(predict_spans(model, sentence, cache))) for sentence, _ in data
    ]
    _write(args.output_file, emit_annotations(Dataset(predicted)))
    return EXIT_OK


def cmd_evaluate(args):
    golds = parse_annotations(_read(args.gold_file))
    preds = parse_annotations(_read(args.pred_file))
    if len(golds) != len(preds):
        raise ValueError(
            f"sentence count mismatch: {len(golds)} gold vs {len(preds)} predicted"
        )
    for i, ((gs, _), (ps, _)) in enumerate(zip(golds, preds)):
        if gs.tokens != ps.tokens:
            raise ValueError(f"sentence {i + 1}: token sequences differ between files")
    pred_spans = [list(spans) for _, spans in preds]
    gold_spans = [list(spans) for _, spans in golds]
    sys.stdout.write(metrics_report(pred_spans, gold_spans, porcelain=args.porcelain))
    if args.lengths_out:
        _write(args.lengths_out, length_breakdown_rows(pred_spans, gold_spans))
    return EXIT_OK


def cmd_xval(args):
    config = _load_train_config(args)
    data = parse_annotations(_read(args.data_file))
    folds = make_folds(data, config.folds, config.dev_fraction, config.seed)
    if args.manifest_out:
        _write(args.manifest_out, fold_manifest(folds))
    report = cross_validate(data, config, folds=folds)
    sys.stdout.write(report.summary())
    return EXIT_OK


def cmd_selfcheck(args):
    ok, lines = run_selfcheck()
    for line in lines:
        print(line)
    return EXIT_OK if ok else EXIT_SELFCHECK


def build_parser():
    parser = _Parser(prog="sentspan", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sentspan {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model and write a checkpoint")
    p.add_argument("train_file")
    p.add_argument("model_out")
    p.add_argument("--dev", dest="dev_file", help="dev file; default carves from train")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--report-out", help="report path; default MODEL_OUT.report")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="tag a file with a trained model")
    p.add_argument("model_in")
    p.add_argument("input_file")
    p.add_argument("output_file")
    p.add_argument("--config", help="optional config to cross-check dimensions")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("gold_file")
    p.add_argument("pred_file")
    p.add_argument("--porcelain", action="store_true", help="machine-readable key=value output")
    p.add_argument("--lengths-out", help="write tab-separated per-length rows here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("xval", help="k-fold cross-validation")
    p.add_argument("data_file")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--manifest-out", help="write fold index manifest here")
    p.set_defaults(func=cmd_xval)

    p = sub.add_parser("selfcheck", help="run the numeric verification suite")
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (AnnotationError, EmbeddingFormatError) as exc:
        print(f"sentspan: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        print(f"sentspan: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
