"""Command-line surface: train, predict, eval, audit and bench subcommands."""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .dataio import (Dataset, DatasetFormatError, ModelFormatError,
                     load_label_names, load_model, parse_dataset, save_model,
                     write_dataset)
from .metrics import evaluate
from .mips import NoCandidateError, index_from_matrix
from .mips.audit import audit_inexactness
from .train import TrainConfig, train_l1, train_l2


def _add_dataset_flags(p):
    p.add_argument("--zero-based", action="store_true",
                   help="feature indices in the file start at 0 (default: 1)")
    p.add_argument("--dim", type=int, default=None,
                   help="force the feature dimension")
    p.add_argument("--classes", type=int, default=None,
                   help="force the class count")


def _add_backend_flags(p):
    p.add_argument("--backend", choices=("exact", "simplelsh", "swgraph"),
                   default="exact", help="MIPS backend for margin queries")
    p.add_argument("--lsh-bits", type=int, default=None,
                   help="hash bits per LSH table (default 64)")
    p.add_argument("--lsh-tables", type=int, default=None,
                   help="number of LSH tables (default 32)")
    p.add_argument("--swg-m", type=int, default=None,
                   help="max graph neighbors per node (default 16)")
    p.add_argument("--swg-ef-construction", type=int, default=None,
                   help="graph candidate list size at insert (default 100)")
    p.add_argument("--swg-ef-search", type=int, default=None,
                   help="graph candidate list size at query (default 64)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")


def _warn_unused_backend_flags(args):
    lsh = {"--lsh-bits": args.lsh_bits, "--lsh-tables": args.lsh_tables}
    swg = {"--swg-m": args.swg_m,
           "--swg-ef-construction": args.swg_ef_construction,
           "--swg-ef-search": args.swg_ef_search}
    unused = []
    if args.backend != "simplelsh":
        unused += [k for k, v in lsh.items() if v is not None]
    if args.backend != "swgraph":
        unused += [k for k, v in swg.items() if v is not None]
    for flag in unused:
        print(f"warning: {flag} has no effect with --backend {args.backend}; "
              "ignored", file=sys.stderr)


def _backend_params(args) -> dict:
    return {
        "seed": args.seed,
        "lsh_bits": args.lsh_bits if args.lsh_bits is not None else 64,
        "lsh_tables": args.lsh_tables if args.lsh_tables is not None else 32,
        "swg_max_neighbors": args.swg_m if args.swg_m is not None else 16,
        "swg_ef_construction": (args.swg_ef_construction
                                if args.swg_ef_construction is not None else 100),
        "swg_ef_search": (args.swg_ef_search
                          if args.swg_ef_search is not None else 64),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mipsvm",
        description="Multi-class linear SVMs trained with approximate "
                    "maximum-inner-product margins.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model on a LIBSVM-style file")
    p_train.add_argument("data", help="training data file")
    p_train.add_argument("--algo", choices=("l2", "l1"), default="l2")
    p_train.add_argument("--lambda", dest="lam", type=float, default=None,
                         help="regularization weight (default: 1 for l2, 1e-6 for l1)")
    p_train.add_argument("--eta0", type=float, default=0.1)
    p_train.add_argument("--eta-step", type=float, default=0.02)
    p_train.add_argument("--epochs", type=int, default=10)
    p_train.add_argument("--batch-size", type=int, default=None,
                         help="default: round(100*sqrt(C))")
    p_train.add_argument("--rho", type=float, default=1.0,
                         help="hinge width for reported risks")
    p_train.add_argument("--threads", type=int, default=1,
                         help="threads for the batch query phase")
    p_train.add_argument("--no-truncation", action="store_true",
                         help="disable the l1 truncation step")
    p_train.add_argument("--early-stop", action="store_true",
                         help="stop after 5 epochs without heldout MaF1 gains")
    p_train.add_argument("--heldout", default=None, help="heldout data file")
    p_train.add_argument("--model-out", default=None, help="write the model here")
    p_train.add_argument("--log-out", default=None, help="write the epoch log here")
    p_train.add_argument("--format", choices=("binary", "text"), default="binary",
                         help="model file format")
    _add_backend_flags(p_train)
    _add_dataset_flags(p_train)

    p_pred = sub.add_parser("predict", help="predict labels for a data file")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--input", required=True)
    p_pred.add_argument("--output", default=None,
                        help="labels file (default: stdout)")
    _add_dataset_flags(p_pred)

    p_eval = sub.add_parser("eval", help="accuracy and macro-F1 on a test file")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--test", required=True)
    _add_dataset_flags(p_eval)

    p_audit = sub.add_parser(
        "audit", help="empirical (epsilon, delta) report for a backend")
    p_audit.add_argument("--model", required=True)
    p_audit.add_argument("--queries", required=True, help="labeled query file")
    p_audit.add_argument("--epsilon", type=float, default=0.1,
                         help="gap threshold (inf allowed)")
    _add_backend_flags(p_audit)
    _add_dataset_flags(p_audit)

    p_bench = sub.add_parser(
        "bench", help="generate synthetic data and time a short run")
    p_bench.add_argument("--classes", type=int, default=50)
    p_bench.add_argument("--dim", type=int, default=100)
    p_bench.add_argument("--examples", type=int, default=2000)
    p_bench.add_argument("--noise", type=float, default=0.4)
    p_bench.add_argument("--algo", choices=("l2", "l1"), default="l2")
    p_bench.add_argument("--epochs", type=int, default=5)
    p_bench.add_argument("--out", default=None,
                         help="also write the generated dataset here")
    _add_backend_flags(p_bench)
    return parser


def _load_dataset(path, args, label_map=None) -> Dataset:
    return parse_dataset(path, zero_based=args.zero_based, dim=args.dim,
                         num_classes=args.classes, label_map=label_map)


def _train_config(args) -> TrainConfig:
    lam = args.lam if args.lam is not None else (1.0 if args.algo == "l2" else 1e-6)
    params = _backend_params(args)
    return TrainConfig(lam=lam, rho=args.rho, eta0=args.eta0,
                       eta_step=args.eta_step, epochs=args.epochs,
                       batch_size=args.batch_size, backend=args.backend,
                       seed=args.seed, truncation=not args.no_truncation,
                       lsh_bits=params["lsh_bits"],
                       lsh_tables=params["lsh_tables"],
                       swg_max_neighbors=params["swg_max_neighbors"],
                       swg_ef_construction=params["swg_ef_construction"],
                       swg_ef_search=params["swg_ef_search"],
                       threads=args.threads, early_stop=args.early_stop)


def _cmd_train(args) -> int:
    _warn_unused_backend_flags(args)
    data = _load_dataset(args.data, args)
    heldout = None
    if args.heldout:
        heldout = parse_dataset(args.heldout, zero_based=args.zero_based,
                                dim=data.dim, num_classes=None,
                                label_map=data.label_map)
    cfg = _train_config(args)
    trainer = train_l2 if args.algo == "l2" else train_l1
    t0 = time.perf_counter()
    W, log = trainer(data, cfg, heldout=heldout)
    seconds = time.perf_counter() - t0
    if args.model_out:
        save_model(args.model_out, W, lam=cfg.lam, algorithm=args.algo,
                   fmt=args.format, label_names=data.label_names())
    if args.log_out:
        log.write_tsv(args.log_out)
    record = {
        "algo": args.algo, "backend": args.backend, "epochs": len(log),
        "train_seconds": seconds, "final_objective": log.objective[-1],
        "nnz": log.nnz[-1],
    }
    if heldout is not None:
        record["heldout_accuracy"] = log.heldout_accuracy[-1]
        record["heldout_macro_f1"] = log.heldout_macro_f1[-1]
    print(json.dumps(record))
    return 0


def _cmd_predict(args) -> int:
    W, _ = load_model(args.model)
    names = load_label_names(args.model)
    data = _load_dataset(args.input, args)
    from .metrics import predict_batch
    pred = predict_batch(W, data)
    lines = [(names[c] if names and c < len(names) else str(c)) for c in pred]
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.writelines(line + "\n" for line in lines)
    else:
        for line in lines:
            print(line)
    return 0


def _cmd_eval(args) -> int:
    W, _ = load_model(args.model)
    names = load_label_names(args.model)
    label_map = {name: i for i, name in enumerate(names)} if names else None
    data = parse_dataset(args.test, zero_based=args.zero_based, dim=W.dim,
                         num_classes=None, label_map=label_map)
    report = evaluate(W, data)
    print(json.dumps(report.to_dict()))
    return 0


def _cmd_audit(args) -> int:
    _warn_unused_backend_flags(args)
    W, _ = load_model(args.model)
    names = load_label_names(args.model)
    label_map = {name: i for i, name in enumerate(names)} if names else None
    queries = parse_dataset(args.queries, zero_based=args.zero_based, dim=W.dim,
                            num_classes=None, label_map=label_map)
    bad = [y for y, _ in queries.examples if y >= W.num_classes]
    if bad:
        raise DatasetFormatError(
            f"{len(bad)} query label(s) are unknown to the model")
    index = index_from_matrix(W, args.backend, **_backend_params(args))
    report = audit_inexactness(index, W, queries, args.epsilon)
    out = report.to_dict()
    out["backend"] = args.backend
    print(json.dumps(out))
    return 0


def _cmd_bench(args) -> int:
    _warn_unused_backend_flags(args)
    from .synth import make_synthetic
    from .train import config_for_algo

    data = make_synthetic(args.classes, args.dim, args.examples,
                          noise=args.noise, seed=args.seed)
    if args.out:
        write_dataset(args.out, data)
    params = _backend_params(args)
    cfg = config_for_algo(args.algo, backend=args.backend, epochs=args.epochs,
                          seed=args.seed, lsh_bits=params["lsh_bits"],
                          lsh_tables=params["lsh_tables"],
                          swg_max_neighbors=params["swg_max_neighbors"],
                          swg_ef_construction=params["swg_ef_construction"],
                          swg_ef_search=params["swg_ef_search"])
    trainer = train_l2 if args.algo == "l2" else train_l1
    t0 = time.perf_counter()
    W, log = trainer(data, cfg)
    train_seconds = time.perf_counter() - t0
    report = evaluate(W, data)
    print(json.dumps({
        "classes": args.classes, "dim": args.dim, "examples": args.examples,
        "algo": args.algo, "backend": args.backend, "epochs": len(log),
        "train_seconds": train_seconds, "epoch_seconds": float(np.mean(log.seconds)),
        "predict_seconds": report.predict_seconds,
        "train_accuracy": report.accuracy, "nnz": log.nnz[-1],
    }))
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "audit": _cmd_audit,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 1
    except (DatasetFormatError, ModelFormatError, NoCandidateError,
            ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
