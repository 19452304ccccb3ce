"""Command-line front end for scripted experiments.

Exit codes: 0 on success, 1 on usage errors (unknown flags, missing
arguments), 2 on data or format errors (missing files, bad magic, dimension
mismatches). All randomness flows from the --seed flags.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .classifier import PREDICTION_MODES, confusion_csv, evaluate, predict, predict_ncm, report_text
from .dataset import make_synthetic, read_cef, write_cef
from .errors import CbclError
from .harness import REDUCTION_MODES, run_experiment, write_increment_csv, write_summary
from .model import CbclModel, learn_class, load_model, save_model, total_centroids
from .reduction import apply_reduction, plan_reduction
from .tuning import tune

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage problems; the CLI contract reserves 2
    # for data errors, so usage failures are remapped to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cbcl", description="Centroid-based incremental learning toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic Gaussian-cluster CEF dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--sep", type=float, required=True, help="minimum distance between class means")
    p.add_argument("--spread", type=float, required=True, help="within-class standard deviation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("learn", help="learn all classes of a CEF file into a model")
    p.add_argument("--input", required=True, help="CEF training data")
    p.add_argument("--threshold", type=float, required=True, help="centroid merge distance")
    p.add_argument("--model", help="existing CMF model to continue from")
    p.add_argument("-o", "--output", required=True, help="CMF destination")

    p = sub.add_parser("predict", help="write predicted labels for a CEF file")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--votes", type=int, default=1, help="number of nearest centroids")
    p.add_argument("--mode", choices=PREDICTION_MODES, default="voting")
    p.add_argument("-o", "--output", required=True, help="labels CSV destination")

    p = sub.add_parser("evaluate", help="score a model on a labeled CEF file")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--votes", type=int, default=1)
    p.add_argument("--mode", choices=PREDICTION_MODES, default="voting")
    p.add_argument("-o", "--output", help="report destination (default: stdout)")
    p.add_argument("--confusion", help="optional confusion-matrix CSV destination")

    p = sub.add_parser("reduce", help="shrink a model's centroid count under a budget")
    p.add_argument("--model", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--k-new", type=int, default=0, help="centroids to reserve for incoming classes")
    p.add_argument("--reduction", choices=REDUCTION_MODES, default="cluster")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("tune", help="cross-validate threshold and vote size for new classes")
    p.add_argument("--model", help="existing CMF model (omit to start empty)")
    p.add_argument("--input", required=True, help="CEF with the new classes' training data")
    p.add_argument("--d-grid", type=_float_list, required=True)
    p.add_argument("--n-grid", type=_int_list, required=True)
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("run", help="drive a full experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("-o", "--outdir", default=".", help="directory for result files")
    p.add_argument("--threads", type=int, help="override the config's thread count")

    return parser


def _cmd_synth(args) -> int:
    data = make_synthetic(
        args.classes, args.per_class, args.dim, args.sep, args.spread, args.seed
    )
    write_cef(data, args.output)
    return 0


def _cmd_learn(args) -> int:
    data = read_cef(args.input)
    model = load_model(args.model) if args.model else CbclModel(data.dim)
    for cid in data.classes:
        learn_class(model, cid, data.vectors[data.class_index[cid]].astype("float64"), args.threshold)
    save_model(model, args.output)
    return 0


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    data = read_cef(args.input)
    with open(args.output, "w") as sink:
        sink.write("index,label,predicted\n")
        for i in range(len(data)):
            vector = data.vectors[i].astype("float64")
            if args.mode == "ncm":
                pred = predict_ncm(model, vector)
            else:
                votes = 1 if args.mode == "single-centroid" else args.votes
                pred = predict(model, vector, votes)
            sink.write(f"{i},{int(data.labels[i])},{pred.label}\n")
    return 0


def _cmd_evaluate(args) -> int:
    model = load_model(args.model)
    data = read_cef(args.input)
    report = evaluate(model, data, n=args.votes, mode=args.mode)
    text = report_text(report)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if args.confusion:
        Path(args.confusion).write_text(confusion_csv(report))
    return 0


def _cmd_reduce(args) -> int:
    model = load_model(args.model)
    plan = plan_reduction(model, args.k_new, args.budget)
    apply_reduction(model, plan, mode=args.reduction, seed=args.seed)
    save_model(model, args.output)
    sys.stdout.write(f"total_centroids\t{total_centroids(model)}\n")
    return 0


def _cmd_tune(args) -> int:
    data = read_cef(args.input)
    model = load_model(args.model) if args.model else CbclModel(data.dim)
    samples = {
        cid: data.vectors[data.class_index[cid]].astype("float64") for cid in data.classes
    }
    hp = tune(model, samples, args.d_grid, args.n_grid, folds=args.folds, seed=args.seed)
    sys.stdout.write(f"distance_threshold\t{hp.distance_threshold:g}\n")
    sys.stdout.write(f"vote_neighbors\t{hp.vote_neighbors}\n")
    return 0


def _cmd_run(args) -> int:
    config, train_path, test_path = harness.parse_config_file(args.config)
    if args.threads is not None:
        config.threads = args.threads
    train = read_cef(train_path)
    test = read_cef(test_path) if test_path else None
    result = run_experiment(train, config, test_dataset=test)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_increment_csv(result, outdir / "increments.csv")
    write_summary(result, outdir / "summary.txt")
    sys.stdout.write(harness.summary_text(result))
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "learn": _cmd_learn,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "reduce": _cmd_reduce,
    "tune": _cmd_tune,
    "run": _cmd_run,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (CbclError, OSError, ValueError, AssertionError) as exc:
        sys.stderr.write(f"cbcl {args.command}: error: {exc}\n")
        return DATA_ERROR


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
