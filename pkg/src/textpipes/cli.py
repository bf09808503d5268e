"""Command-line entry point: ``textpipes {train,predict,evaluate,search,replicate}``.

Exit codes: 0 success, 2 usage, 3 data/format, 4 numeric/convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import plots
from .corpus import Dataset, load_corpus, read_documents
from .errors import TextPipesError
from .evolve import METRICS, SearchConfig, run_search
from .linear import apply_threshold
from .metrics import (binary_report, confusion_matrix, format_report, multiclass_report,
                      report_items)
from .pipeline import fit_pipeline, load_pipeline, predict_pipeline, preset, save_pipeline

# published shared-task scores of the two discovered pipelines, in percent
PUBLISHED = {
    "1": {"precision": 30.65, "recall": 56.72, "f1": 39.79, "accuracy": 77.00},
    "2": {"micro_f1": 87.10, "macro_f1": 46.45},
    "2-post": {"micro_f1": 87.60, "macro_f1": 50.20},
    "transfer": {"precision": 32.58, "recall": 64.18, "f1": 43.22, "accuracy": 77.40},
}
LOW_THRESHOLD = 0.007


def _labels_arg(value):
    names = [v.strip() for v in value.split(",") if v.strip()]
    if not names:
        raise argparse.ArgumentTypeError("need at least one label name")
    return names


def _infer_label_names(label_path):
    tags = sorted({t.strip() for t in read_documents(label_path)})
    if all(t.lstrip("-").isdigit() for t in tags):
        tags.sort(key=int)
    return tags or ["0", "1"]


def _dataset(text, labels, names) -> Dataset:
    return load_corpus(text, labels, names or _infer_label_names(labels))


def _print_config(args, fmt="text"):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    line = json.dumps(cfg, sort_keys=True, default=str)
    print(f"config={line}" if fmt == "kv" else f"config: {line}")


def _evaluate_labels(y_true, y_pred, label_names, fmt, extra=None):
    cm = confusion_matrix(y_true, y_pred, len(label_names))
    rep = binary_report(cm) if len(label_names) == 2 else multiclass_report(cm)
    return cm, rep, format_report(rep, fmt, extra)


def _write_eval_report(out_dir, cm, rep, label_names, stem="test"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plots.write_tsv(out / f"{stem}_metrics.tsv", ["metric", "value"],
                    [[k, f"{v:.6f}" if isinstance(v, float) else v] for k, v in report_items(rep)])
    plots.write_tsv(out / f"{stem}_confusion.tsv", ["true\\pred"] + list(label_names),
                    [[name] + row.tolist() for name, row in zip(label_names, cm.counts)])
    plots.confusion_figure(cm.counts, label_names, out / f"{stem}_confusion.png")


def _write_threshold_report(out_dir, y_true, positive_probs, marks):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = np.unique(np.concatenate([np.geomspace(1e-4, 0.99, 60), marks]))
    rows, prec, rec, f1 = [], [], [], []
    for t in grid:
        rep = binary_report(confusion_matrix(y_true, apply_threshold(positive_probs, t), 2))
        rows.append([f"{t:.6g}", f"{rep.precision:.6f}", f"{rep.recall:.6f}", f"{rep.f1:.6f}",
                     f"{rep.accuracy:.6f}"])
        prec.append(rep.precision)
        rec.append(rep.recall)
        f1.append(rep.f1)
    plots.write_tsv(out / "threshold_sweep.tsv",
                    ["threshold", "precision", "recall", "f1", "accuracy"], rows)
    plots.threshold_figure(grid, prec, rec, f1, out / "threshold_sweep.png", marks)


# subcommands ---------------------------------------------------------------

def cmd_train(args):
    ds = _dataset(args.text, args.labels, args.label_names)
    overrides = {}
    if args.rfe_target is not None:
        overrides["RFE.target_percent"] = args.rfe_target
    if args.min_df is not None:
        overrides["CountVectorize.min_df"] = args.min_df
    spec = preset(args.preset, **overrides)
    _print_config(args)
    fp = fit_pipeline(spec, ds, seed=args.seed, threads=args.threads)
    save_pipeline(fp, args.out)
    print(f"wrote {args.out}: {spec.summary()}")
    return 0


def cmd_predict(args):
    fp = load_pipeline(args.model)
    docs = read_documents(args.text)
    _print_config(args)
    labels, _ = predict_pipeline(fp, docs, args.threshold, threads=args.threads)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.writelines(f"{fp.label_names[i]}\n" for i in labels)
    print(f"wrote {len(labels)} predictions to {args.out}")
    return 0


def cmd_evaluate(args):
    fp = load_pipeline(args.model)
    ds = load_corpus(args.text, args.labels, list(fp.label_names))
    _print_config(args, args.format)
    pred, proba = predict_pipeline(fp, ds.documents, args.threshold, threads=args.threads)
    cm, rep, text = _evaluate_labels(ds.y, pred, fp.label_names, args.format, {"n": len(ds)})
    sys.stdout.write(text)
    if args.report_dir:
        _write_eval_report(args.report_dir, cm, rep, fp.label_names)
        if fp.is_binary and len(ds):
            marks = sorted({0.5, args.threshold if args.threshold is not None else 0.5})
            _write_threshold_report(args.report_dir, ds.y, proba[:, 1], marks)
    return 0


def cmd_search(args):
    ds = _dataset(args.text, args.labels, args.label_names)
    cfg = SearchConfig(
        population_size=args.population, generations=args.generations,
        eval_timeout_seconds=args.timeout, metric=args.metric, cv_folds=args.folds,
        seed=args.seed,
    )
    _print_config(args)

    def progress(r):
        print(f"gen {r.generation:3d}  best={r.best_fitness:.4f}  mean={r.mean_fitness:.4f}  "
              f"ok={r.n_ok} timeout={r.n_timeout} error={r.n_error}  {r.best_spec}",
              file=sys.stderr, flush=True)

    fp, log, best = run_search(cfg, ds, threads=args.threads, progress=progress)
    save_pipeline(fp, args.out)
    Path(args.log).write_text(log.to_json(), encoding="utf-8")
    if args.report_dir:
        plots.write_search_report(log, args.report_dir, args.metric)
    print(f"best {args.metric}={best.fitness:.4f}: {best.spec.summary()}")
    print(f"wrote {args.out} and {args.log}")
    return 0


def _note(key, value, fmt):
    print(f"{key}={value}" if fmt == "kv" else f"-- {key}: {value}")


def _published_rows(rep, published, fmt):
    lines = []
    for key, ref in published.items():
        ours = 100 * getattr(rep, key)
        lines.append((key, ours, ref))
    if fmt == "kv":
        return "".join(f"{k}={o / 100:.4f}\npublished.{k}={r / 100:.4f}\n" for k, o, r in lines)
    width = max(len(k) for k, _, _ in lines)
    out = [f"{'metric':<{width}}  {'ours':>7}  {'published':>9}"]
    out += [f"{k:<{width}}  {o:6.2f}%  {r:8.2f}%" for k, o, r in lines]
    return "\n".join(out) + "\n"


def cmd_replicate(args):
    binary = args.task in ("1", "transfer")
    names = args.label_names or (["0", "1"] if binary else _infer_label_names(args.train_labels))
    train = load_corpus(args.train_text, args.train_labels, names)
    test = load_corpus(args.test_text, args.test_labels, names)
    if binary and len(names) != 2:
        raise TextPipesError(f"task {args.task} needs binary labels, got {names}")
    spec = preset("subtask1" if args.task == "1" else "subtask2")
    _print_config(args, args.format)
    _note("pipeline", spec.summary(), args.format)
    fp = fit_pipeline(spec, train, seed=args.seed, threads=args.threads)
    pred, proba = predict_pipeline(fp, test.documents, threads=args.threads)
    cm, rep, _ = _evaluate_labels(test.y, pred, names, args.format)
    if binary:
        _note("threshold", 0.5, args.format)
        sys.stdout.write(_published_rows(rep, PUBLISHED[args.task], args.format))
        low = apply_threshold(proba[:, 1], args.threshold)
        cm_low = confusion_matrix(test.y, low, 2)
        rep_low = binary_report(cm_low)
        _note("threshold", args.threshold, args.format)
        sys.stdout.write(_published_rows(rep_low, PUBLISHED[args.task], args.format))
    else:
        _note("reference", "contest", args.format)
        sys.stdout.write(_published_rows(rep, PUBLISHED["2"], args.format))
        _note("reference", "post-contest", args.format)
        sys.stdout.write(_published_rows(rep, PUBLISHED["2-post"], args.format))
    if args.report_dir:
        _write_eval_report(args.report_dir, cm, rep, names)
        if binary:
            _write_eval_report(args.report_dir, cm_low, rep_low, names, stem="test_low_threshold")
            _write_threshold_report(args.report_dir, test.y, proba[:, 1], [0.5, args.threshold])
    return 0


# parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="textpipes", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads (default: all cores); results do not depend on it")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--label-names", type=_labels_arg, default=None,
                        help="comma-separated tags in class-id order (default: sorted tags)")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", parents=[common], help="fit a preset pipeline")
    t.add_argument("--preset", required=True, choices=["subtask1", "subtask2"])
    t.add_argument("--text", required=True)
    t.add_argument("--labels", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--min-df", type=int, default=None)
    t.add_argument("--rfe-target", type=int, default=None,
                   help="percent of columns RFE keeps (subtask1)")
    t.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict", parents=[common], help="write one predicted tag per line")
    pr.add_argument("--model", required=True)
    pr.add_argument("--text", required=True)
    pr.add_argument("--threshold", type=float, default=None)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_predict)

    e = sub.add_parser("evaluate", parents=[common], help="score a model on labeled text")
    e.add_argument("--model", required=True)
    e.add_argument("--text", required=True)
    e.add_argument("--labels", required=True)
    e.add_argument("--threshold", type=float, default=None)
    e.add_argument("--format", choices=["text", "kv"], default="text")
    e.add_argument("--report-dir", default=None, help="write TSV tables and PNG figures here")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("search", parents=[common], help="evolve a pipeline")
    s.add_argument("--text", required=True)
    s.add_argument("--labels", required=True)
    s.add_argument("--population", type=int, default=100)
    s.add_argument("--generations", type=int, default=100)
    s.add_argument("--timeout", type=float, default=300.0, help="seconds per individual")
    s.add_argument("--metric", choices=METRICS, default="accuracy")
    s.add_argument("--folds", type=int, default=5)
    s.add_argument("--out", required=True)
    s.add_argument("--log", required=True)
    s.add_argument("--report-dir", default=None)
    s.set_defaults(func=cmd_search)

    r = sub.add_parser("replicate", parents=[common], help="fit a preset and compare scores")
    r.add_argument("--task", required=True, choices=["1", "2", "transfer"])
    r.add_argument("--train-text", required=True)
    r.add_argument("--train-labels", required=True)
    r.add_argument("--test-text", required=True)
    r.add_argument("--test-labels", required=True)
    r.add_argument("--threshold", type=float, default=LOW_THRESHOLD,
                   help="lowered decision threshold for binary tasks")
    r.add_argument("--format", choices=["text", "kv"], default="text")
    r.add_argument("--report-dir", default=None)
    r.set_defaults(func=cmd_replicate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        parser.print_usage(sys.stderr)
        print("textpipes: error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except TextPipesError as exc:
        print(f"textpipes: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"textpipes: {exc}", file=sys.stderr)
        return 3


run_cli = main

if __name__ == "__main__":
    sys.exit(main())
