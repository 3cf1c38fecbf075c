"""Command line entry point.

Subcommands: retro-single, retro-chain, trojan, baselines, tsne, gen-data,
simcheck.  Exit codes: 0 success, 1 usage error, 2 runtime failure.  With
``--json`` runtime failures are also written to stderr as one JSON object.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import datagen, features, harness, simcheck
from .features import TSNEConfig


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage by default; the CLI contract wants 1
    def error(self, message):
        raise UsageError(message)


def _add_run_flags(parser, default_epochs=None, default_lr=None):
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--data", type=str, default=None,
                        help="corpus or feature CSV path")
    parser.add_argument("--out", type=Path, default=Path("runs"))
    parser.add_argument("--epochs", type=int, default=default_epochs)
    parser.add_argument("--lr", type=float, default=default_lr)
    parser.add_argument("--json", action="store_true", dest="json_errors",
                        help="machine-readable errors on stderr")


def build_parser() -> _Parser:
    parser = _Parser(prog="hqml", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("retro-single", help="single-reaction-type classification")
    _add_run_flags(p)
    p.add_argument("--model", choices=("lstm", "qlstm"), default="lstm")

    p = sub.add_parser("retro-chain", help="chemical-chain label prediction")
    _add_run_flags(p)
    p.add_argument("--model", choices=("lstm", "qlstm"), default="lstm")

    p = sub.add_parser("trojan", help="Trojan detection (QNN or dense NN)")
    _add_run_flags(p)
    p.add_argument("--model", choices=("qnn", "dense_nn"), default="qnn")

    p = sub.add_parser("baselines", help="Trojan classifier comparison table")
    _add_run_flags(p)
    p.add_argument("--models", nargs="+",
                   default=["perceptron", "logreg", "gnb", "qnn", "dense_nn"])
    p.add_argument("--pattern", choices=("clusters", "xor"), default="xor")

    p = sub.add_parser("tsne", help="reduce a feature CSV to 2-D")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("tsne_out.csv"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--json", action="store_true", dest="json_errors")

    p = sub.add_parser("gen-data", help="emit a synthetic corpus")
    p.add_argument("kind", choices=("smiles-toy", "trojan-synth"))
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pattern", choices=("clusters", "xor"), default="clusters")
    p.add_argument("--n-single", type=int, default=12)
    p.add_argument("--n-acetic", type=int, default=110)
    p.add_argument("--n-acetone", type=int, default=110)
    p.add_argument("--n-other", type=int, default=30)
    p.add_argument("--separation", type=float, default=18.0)
    p.add_argument("--json", action="store_true", dest="json_errors")

    p = sub.add_parser("simcheck", help="oracle suites for qsim and gradients")
    p.add_argument("--json", action="store_true", dest="json_errors")
    return parser


def _load_config(args, task, model):
    if args.config is not None:
        with open(args.config, encoding="utf-8") as handle:
            config = harness.ExperimentConfig.from_dict(json.load(handle))
    else:
        config = harness.default_config(task, model,
                                        seed=args.seed if args.seed is not None else 0)
    overrides = {"seed": args.seed, "data": args.data,
                 "epochs": args.epochs, "lr": args.lr}
    if model is not None:
        overrides["model"] = model
    for name, value in overrides.items():
        if value is not None:
            setattr(config, name, value)
    config.__post_init__()
    return config


def _cmd_run(args, task):
    config = _load_config(args, task, args.model)
    artifacts = harness.run_experiment(config, out_dir=args.out)
    print(f"run directory: {artifacts.run_dir}")
    for key in ("final_train_acc", "best_train_acc", "best_val_acc",
                "test_acc", "train_acc", "status"):
        if key in artifacts.summary:
            print(f"  {key}: {artifacts.summary[key]}")
    harness.emit_plot_data(artifacts.run_dir)
    return 0


def _cmd_baselines(args):
    seed = args.seed if args.seed is not None else 0
    data = args.data or {"kind": "trojan-synth", "pattern": args.pattern}
    configs = []
    for model in args.models:
        config = harness.default_config("trojan_baselines", model, seed=seed)
        config.data = data
        if args.epochs is not None:
            config.epochs = args.epochs
        if args.lr is not None:
            config.lr = args.lr
        config.__post_init__()
        configs.append(config)
    rows = harness.compare_models(configs, out_dir=args.out)
    width = max(len(r["model"]) for r in rows)
    print(f"{'model':<{width}}  train_acc  test_acc")
    for r in rows:
        train = "-" if r["train_acc"] is None else f"{r['train_acc']:.4f}"
        test = "-" if r["test_acc"] is None else f"{r['test_acc']:.4f}"
        print(f"{r['model']:<{width}}  {train:>9}  {test:>8}")
    return 0


def _cmd_tsne(args):
    fm = features.load_feature_csv(args.data)
    cfg = TSNEConfig(perplexity=args.perplexity, n_iter=args.iters, seed=args.seed)
    embedding, info = features.tsne_reduce(fm, cfg, return_info=True)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    features.write_reduced_csv(args.out, embedding, fm.labels)
    print(f"wrote {args.out} (KL {info['kl_initial']:.4f} -> {info['kl_final']:.4f})")
    return 0


def _cmd_gen_data(args):
    args.out.parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "smiles-toy":
        lines = datagen.gen_smiles_toy(n_single=args.n_single,
                                       n_acetic=args.n_acetic,
                                       n_acetone=args.n_acetone,
                                       n_other=args.n_other, seed=args.seed)
        datagen.write_smiles_corpus(args.out, lines)
        print(f"wrote {len(lines)} records to {args.out}")
    else:
        fm = datagen.gen_trojan_synth(pattern=args.pattern,
                                      separation=args.separation, seed=args.seed)
        features.write_feature_csv(args.out, fm)
        print(f"wrote {fm.n} rows ({fm.rows.shape[1]} features) to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        if args.command in ("retro-single", "retro-chain", "trojan"):
            if args.epochs is not None and args.epochs < 0:
                raise UsageError("--epochs must be non-negative")
            if args.lr is not None and args.lr <= 0:
                raise UsageError("--lr must be positive")
            task = {"retro-single": "retro_single", "retro-chain": "retro_chain",
                    "trojan": "trojan_qnn" if args.model == "qnn"
                    else "trojan_classical_nn"}[args.command]
            return _cmd_run(args, task)
        if args.command == "baselines":
            return _cmd_baselines(args)
        if args.command == "tsne":
            return _cmd_tsne(args)
        if args.command == "gen-data":
            return _cmd_gen_data(args)
        if args.command == "simcheck":
            return 0 if simcheck.run_all() else 2
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except Exception as exc:  # runtime failure -> exit 2
        if getattr(args, "json_errors", False):
            print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
                  file=sys.stderr)
        else:
            print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
