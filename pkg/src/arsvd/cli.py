"""Command-line interface: ``arsvd <command> ...``.

Exit codes: 0 success, 1 contract or validation error, 2 numerical failure,
3 I/O error.
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .compress import numerical_spectrum
from .entropy import entropy_profile, normalize_spectrum, select_rank
from .errors import ContainerError, ContractError, NumericalError
from .formats import load_dataset, load_model, save_dataset, save_model
from .harness import BlobSpec, load_config, make_blobs, run_sweep, write_sweep
from .linalg import svd
from .model import (
    DenseLayer,
    compress_model,
    compress_model_fixed_rank,
    evaluate,
    parameter_count,
)
from .report import CompressionReport, emit_report, read_report
from .train import TrainConfig, train_mlp

EXIT_OK, EXIT_CONTRACT, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


def _layer_matrix(layer):
    return layer.w if isinstance(layer, DenseLayer) else layer.factors.materialize()


def cmd_compress(args, out):
    model = load_model(args.model, args.manifest)
    start = time.perf_counter()
    if args.fixed_rank is not None:
        cmodel, _, report = compress_model_fixed_rank(model, args.fixed_rank, args.no_inflate)
    else:
        cmodel, _, report = compress_model(model, args.tau, args.no_inflate)
    elapsed = time.perf_counter() - start
    save_model(cmodel, args.out)
    if args.report:
        emit_report(report, args.report)
    t = report.totals()
    for rec in report.layers:
        flag = " INFLATED" if rec.inflation else ""
        print(f"layer {rec.layer_index}: {rec.m}x{rec.n} k={rec.k} "
              f"params {rec.params_before} -> {rec.params_after}{flag}", file=out)
    print(f"total params {t['params_before']} -> {t['params_after']} "
          f"({100 * t['param_reduction']:.1f}% reduction)", file=out)
    print(f"compression time {elapsed:.3f}s (SVDs included)", file=out)


def cmd_inspect(args, out):
    model = load_model(args.model, args.manifest)
    print(f"input_dim {model.input_dim} class_count {model.class_count}", file=out)
    print("layer\tkind\tshape\trank\tparams\tactivation", file=out)
    for i, layer in enumerate(model.layers):
        m, n = layer.shape
        if isinstance(layer, DenseLayer):
            kind, rank, params = "dense", min(m, n), layer.w.size
        else:
            kind, rank, params = "factored", layer.k, layer.factors.stored_params
        print(f"{i}\t{kind}\t{m}x{n}\t{rank}\t{params + m}\t{layer.activation}", file=out)
    print(f"total parameters {parameter_count(model)}", file=out)


def cmd_spectrum(args, out):
    model = load_model(args.model, args.manifest)
    if not 0 <= args.layer < len(model.layers):
        raise ContractError(f"layer {args.layer} out of range (model has {len(model.layers)})")
    w = _layer_matrix(model.layers[args.layer])
    s = numerical_spectrum(svd(w).s, w.shape)
    spectrum = normalize_spectrum(s)
    profile = entropy_profile(spectrum)
    sel = select_rank(profile, args.tau)
    print("i\ts_i\tp_i\tH(i)\tH(i)/H_total", file=out)
    for i, (si, pi, hi) in enumerate(zip(s, spectrum.p, profile.partial), 1):
        frac = hi / profile.total if profile.total > 0 else 1.0
        mark = "\t<- k" if i == sel.k else ""
        print(f"{i}\t{si:.10g}\t{pi:.10g}\t{hi:.10g}\t{frac:.6f}{mark}", file=out)
    print(f"H_total {profile.total:.10g}; tau {sel.tau} selects k = {sel.k} "
          f"(fraction {sel.achieved_fraction:.6f})", file=out)


def cmd_train(args, out):
    dims = [int(d) for d in args.arch.split(",") if d.strip()]
    if len(dims) < 2:
        raise ContractError("--arch needs at least an input and an output dimension")
    X, y = load_dataset(args.data, class_count=dims[-1])
    if X.shape[1] != dims[0]:
        raise ContractError(f"data has {X.shape[1]} features but --arch starts with {dims[0]}")
    config = TrainConfig(
        hidden=tuple(dims[1:-1]),
        lr=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        weight_decay=args.weight_decay,
    )
    result = train_mlp(X, y, config, class_count=dims[-1])
    save_model(result.model, args.out)
    print(f"train accuracy {result.train_accuracy:.4f} final loss {result.losses[-1]:.6f}",
          file=out)


def cmd_eval(args, out):
    model = load_model(args.model, args.manifest)
    X, y = load_dataset(args.data, class_count=model.class_count)
    m = evaluate(model, X, y, repeat=args.repeat)
    metrics = {
        "accuracy": m.accuracy,
        "macro_f1": m.macro_f1,
        "seconds_per_sample": m.seconds_per_sample,
        "flops_per_sample": m.flops // X.shape[0],
        "parameters": parameter_count(model),
    }
    for key, value in metrics.items():
        print(f"{key}\t{value}", file=out)
    if args.report:
        report = read_report(args.report)[0] if Path(args.report).exists() else CompressionReport()
        report.metrics = metrics
        emit_report(report, args.report)


def cmd_compare(args, out):
    rep_a, tot_a = read_report(args.report_a)
    rep_b, tot_b = read_report(args.report_b)
    print("quantity\ta\tb\tdelta", file=out)
    rows = [(key, tot_a[key], tot_b.get(key)) for key in tot_a if key in tot_b]
    if rep_a.metrics and rep_b.metrics:
        rows += [(key, rep_a.metrics[key], rep_b.metrics[key])
                 for key in rep_a.metrics if key in rep_b.metrics]
    for key, a, b in rows:
        print(f"{key}\t{a}\t{b}\t{b - a}", file=out)
    print("", file=out)
    print("layer\tm\tn\tk_a\tk_b\tparams_a\tparams_b\tflops_a\tflops_b\terror_a\terror_b", file=out)
    by_b = {r.layer_index: r for r in rep_b.layers}
    for ra in rep_a.layers:
        rb = by_b.get(ra.layer_index)
        if rb is None:
            continue
        print(f"{ra.layer_index}\t{ra.m}\t{ra.n}\t{ra.k}\t{rb.k}\t{ra.params_after}\t"
              f"{rb.params_after}\t{ra.flops_after}\t{rb.flops_after}\t"
              f"{ra.reconstruction_error:.6g}\t{rb.reconstruction_error:.6g}", file=out)


def cmd_make_blobs(args, out):
    spec = BlobSpec(classes=args.classes, per_class=args.per_class, dim=args.dim,
                    separation=args.separation, seed=args.seed)
    Xtr, ytr, Xte, yte = make_blobs(spec)
    save_dataset(args.train_out, Xtr, ytr)
    save_dataset(args.test_out, Xte, yte)
    print(f"wrote {len(ytr)} training and {len(yte)} test samples", file=out)


def cmd_sweep(args, out):
    config = load_config(args.config)
    rows = run_sweep(config)
    write_sweep(rows, args.out)
    print("seed\tmethod\tsetting\tranks\tparams\taccuracy\tmacro_f1\tflops", file=out)
    for r in rows:
        setting = r.tau if r.method == "arsvd" else r.fixed_rank if r.method == "fixed" else "-"
        ranks = ",".join(map(str, r.ranks))
        print(f"{r.seed}\t{r.method}\t{setting}\t{ranks}\t{r.params_after}\t"
              f"{r.accuracy:.4f}\t{r.macro_f1:.4f}\t{r.flops}", file=out)


def build_parser():
    parser = argparse.ArgumentParser(prog="arsvd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def model_args(p):
        p.add_argument("--model", required=True, help="model container (.artn)")
        p.add_argument("--manifest", help="model manifest (default: container path with .txt)")

    p = sub.add_parser("compress", help="compress every dense layer")
    model_args(p)
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--tau", type=float, help="entropy threshold in (0, 1]")
    how.add_argument("--fixed-rank", type=int, help="global truncation rank (baseline)")
    p.add_argument("--no-inflate", action="store_true",
                   help="keep layers dense when factoring would add parameters")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("inspect", help="per-layer shapes, ranks and parameter counts")
    model_args(p)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("spectrum", help="singular values and entropy table of one layer")
    model_args(p)
    p.add_argument("--layer", type=int, required=True)
    p.add_argument("--tau", type=float, default=0.9)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("train", help="train an MLP on a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--arch", required=True, help='comma-separated layer widths, e.g. "64,32,10"')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--weight-decay", type=float, default=TrainConfig.weight_decay)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="accuracy, macro-F1, timing and FLOPs")
    model_args(p)
    p.add_argument("--data", required=True)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--report", help="attach the metrics to this report file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="side-by-side deltas of two reports")
    p.add_argument("--report-a", required=True)
    p.add_argument("--report-b", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("make-blobs", help="write a Gaussian-blob train/test CSV pair")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--per-class", type=int, default=500)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--separation", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)
    p.set_defaults(func=cmd_make_blobs)

    p = sub.add_parser("sweep", help="run an ARSVD vs fixed-rank sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="JSON-lines output, one row per configuration")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args, out)
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ContainerError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: malformed input ({exc!r})", file=sys.stderr)
        return EXIT_CONTRACT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
