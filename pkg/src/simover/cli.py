"""Command-line interface.

Subcommands: split, oversample, gridsearch, evaluate, stats, curve.
Exit codes: 0 success, 1 usage error, 2 data error, 3 run failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .classifier import Hyperparams
from .data import (
    DataFormatError,
    dataset_stats,
    load_dataset,
    save_dataset,
    stratified_partition,
    strip_labels,
)
from .harness import (
    DEFAULT_GRID,
    ExperimentPlan,
    emit_learning_curve,
    grid_search,
    write_aggregates_csv,
    write_best_config,
    write_runs_csv,
)
from .metrics import MeasureSpec, evaluate
from .oversampler import (
    MetricHistoryRecord,
    OversampleConfig,
    oversample,
    write_history_csv,
    write_summary,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUN = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_measure_args(parser) -> None:
    parser.add_argument("--measure", default="f1", help="measure name (default f1)")
    parser.add_argument(
        "--averaging",
        default="weighted",
        help="averaging for precision/recall/f1 (default weighted)",
    )


def _measure_spec(args) -> MeasureSpec:
    averaging = args.averaging if args.measure in ("precision", "recall", "f1") else None
    try:
        return MeasureSpec(args.measure, averaging)
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


def _add_config_args(parser) -> None:
    parser.add_argument("--balance-ratio", type=float, default=0.2)
    parser.add_argument("--calc-type", default="safe_interval",
                        choices=["average", "safe_interval"])
    parser.add_argument("--batch-size", type=int, default=5)
    parser.add_argument("--iterations", type=int, default=100)
    parser.add_argument("--similarity", default="euclidean",
                        choices=["euclidean", "cosine", "jensen_shannon"])
    parser.add_argument("--eval-policy", default="internal_validation",
                        choices=["internal_validation", "external_test"])
    parser.add_argument("--validation-fraction", type=float, default=0.2)
    _add_measure_args(parser)


def build_parser() -> _Parser:
    parser = _Parser(prog="simover", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="partition a labeled file into labeled/pool[/test] files")
    p.add_argument("--input", required=True)
    p.add_argument("--labeled-fraction", type=float, required=True)
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--outdir", required=True)

    p = sub.add_parser("oversample", help="run the mining loop on a labeled set and a pool")
    p.add_argument("--labeled", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--test", default=None, help="labeled eval file for --eval-policy external_test")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--outdir", required=True)
    _add_config_args(p)

    p = sub.add_parser("gridsearch", help="cross-validated grid search from a plan file")
    p.add_argument("--config", required=True, help="JSON plan file")
    p.add_argument("--dataset", default=None)
    p.add_argument("--labeled-fraction", type=float, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--eval-policy", default=None)
    p.add_argument("--validation-fraction", type=float, default=None)
    p.add_argument("--measure", default=None)
    p.add_argument("--averaging", default=None)
    p.add_argument("--outdir", default=None)
    p.add_argument("--workers", type=int, default=None,
                   help="concurrent fold runs (default 1)")
    p.add_argument("--balance-ratio", type=float, nargs="+", default=None,
                   help="override the plan's balance_ratio grid values")
    p.add_argument("--calc-type", nargs="+", default=None)
    p.add_argument("--batch-size", type=int, nargs="+", default=None)
    p.add_argument("--iterations", type=int, nargs="+", default=None)
    p.add_argument("--similarity", nargs="+", default=None)

    p = sub.add_parser("evaluate", help="score a predictions file against a labeled file")
    p.add_argument("--truth", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--threshold", type=float, default=0.5)

    p = sub.add_parser("stats", help="summary statistics of a labeled file")
    p.add_argument("--input", required=True)

    p = sub.add_parser("curve", help="learning-curve CSV from a history CSV")
    p.add_argument("--history", required=True)
    p.add_argument("--out", required=True)

    return parser


def _cmd_split(args) -> int:
    dataset = load_dataset(args.input, "labeled")
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rest = dataset
    if args.test_fraction is not None:
        test, rest = stratified_partition(dataset, args.test_fraction, [args.seed, 0])
        save_dataset(test, outdir / "test.jsonl")
    labeled, rest_pool = stratified_partition(rest, args.labeled_fraction, [args.seed, 1])
    save_dataset(labeled, outdir / "labeled.jsonl")
    save_dataset(strip_labels(rest_pool), outdir / "pool.jsonl")
    with (outdir / "pool_labels.jsonl").open("w", encoding="utf-8") as fh:
        for inst in rest_pool.instances:
            fh.write(json.dumps({"id": inst.id, "labels": [int(b) for b in inst.labels]}) + "\n")
    print(json.dumps({"labeled": len(labeled), "pool": len(rest_pool),
                      "test": len(dataset) - len(rest)}))
    return EXIT_OK


def _cmd_oversample(args) -> int:
    labeled = load_dataset(args.labeled, "labeled")
    pool = load_dataset(args.pool, "unlabeled")
    eval_set = None
    if args.eval_policy == "external_test":
        if args.test is None:
            raise _UsageError("--eval-policy external_test requires --test")
        eval_set = load_dataset(args.test, "labeled")
    config = OversampleConfig(
        balance_ratio=args.balance_ratio,
        similarity_calc_type=args.calc_type,
        batch_size=args.batch_size,
        num_iterations=args.iterations,
        similarity_kind=args.similarity,
        measure=_measure_spec(args),
        seed=args.seed,
        eval_policy=args.eval_policy,
        validation_fraction=args.validation_fraction,
    )
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    outcome = oversample(labeled, pool, config, eval_set)
    wall = time.perf_counter() - started
    save_dataset(outcome.labeled, outdir / "labeled.jsonl")
    save_dataset(outcome.pool, outdir / "pool.jsonl")
    write_history_csv(outcome.history, labeled.num_classes, outdir / "history.csv")
    summary = write_summary(outcome, wall, outdir / "summary.json")
    print(json.dumps(summary))
    return EXIT_OK


def _load_plan(args) -> ExperimentPlan:
    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{args.config}: invalid JSON: {exc}") from exc
    measure = raw.get("measure", {"name": "f1", "averaging": "weighted"})
    if args.measure is not None:
        measure["name"] = args.measure
    if args.averaging is not None:
        measure["averaging"] = args.averaging
    if measure.get("name") not in ("precision", "recall", "f1"):
        measure["averaging"] = None
    seed = args.seed if args.seed is not None else raw.get("seed")
    if seed is None:
        raise _UsageError("a seed is required (plan file field 'seed' or --seed)")
    try:
        hp = Hyperparams(**raw.get("hyperparams", {}))
        dataset_path = args.dataset or raw["dataset"]
        labeled_fraction = (
            args.labeled_fraction
            if args.labeled_fraction is not None
            else raw["labeled_fraction"]
        )
        spec = MeasureSpec(measure["name"], measure.get("averaging"))
    except KeyError as exc:
        raise _UsageError(f"plan file is missing required field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise _UsageError(f"bad plan file value: {exc}") from exc
    grid = dict(raw.get("grid", DEFAULT_GRID))
    for key, value in (
        ("balance_ratio", args.balance_ratio),
        ("similarity_calc_type", args.calc_type),
        ("batch_size", args.batch_size),
        ("num_iterations", args.iterations),
        ("similarity_kind", args.similarity),
    ):
        if value is not None:
            grid[key] = list(value)
    return ExperimentPlan(
        dataset_path=dataset_path,
        labeled_fraction=labeled_fraction,
        k=args.k if args.k is not None else raw.get("k", 5),
        grid=grid,
        measure=spec,
        seed=int(seed),
        eval_policy=args.eval_policy or raw.get("eval_policy", "internal_validation"),
        validation_fraction=(
            args.validation_fraction
            if args.validation_fraction is not None
            else raw.get("validation_fraction", 0.2)
        ),
        hyperparams=hp,
        output_dir=args.outdir or raw.get("output_dir"),
        workers=args.workers if args.workers is not None else raw.get("workers", 1),
    )


def _cmd_gridsearch(args) -> int:
    plan = _load_plan(args)
    dataset = load_dataset(plan.dataset_path, "labeled")
    result = grid_search(plan, dataset)
    if plan.output_dir:
        outdir = Path(plan.output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        write_runs_csv(result, outdir / "runs.csv")
        write_aggregates_csv(result, outdir / "aggregates.csv")
        best = write_best_config(result, outdir / "best_config.json")
    else:
        best = write_best_config(result, Path("best_config.json"))
    print(json.dumps(best))
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    truth = load_dataset(args.truth, "labeled")
    proba_by_id = {}
    path = Path(args.predictions)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                proba_by_id[rec["id"]] = [float(v) for v in rec["proba"]]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataFormatError(f"{path}:{lineno}: bad prediction record: {exc}") from exc
    missing = [i for i in truth.ids() if i not in proba_by_id]
    if missing:
        raise DataFormatError(f"predictions missing for ids: {missing[:5]}")
    proba = np.array([proba_by_id[i] for i in truth.ids()], dtype=np.float64)
    if proba.shape[1] != truth.num_classes:
        raise DataFormatError(
            f"prediction rows have {proba.shape[1]} scores, expected {truth.num_classes}"
        )
    report = evaluate(truth.label_matrix(), proba=proba, threshold=args.threshold)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def _cmd_stats(args) -> int:
    dataset = load_dataset(args.input, "labeled")
    print(json.dumps(dataset_stats(dataset).to_dict(), indent=2))
    return EXIT_OK


def _cmd_curve(args) -> int:
    history = []
    path = Path(args.history)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            try:
                history.append(
                    MetricHistoryRecord(
                        iteration=int(row["iteration"]),
                        selected_class=(
                            None if row["selected_class"] == "" else int(row["selected_class"])
                        ),
                        candidate_count=int(row["candidate_count"]),
                        accepted=bool(int(row["accepted"])),
                        measure_value=float(row["measure"]),
                        factors=(),
                        labeled_size=int(row["labeled_size"]),
                        unlabeled_size=int(row["unlabeled_size"]),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise DataFormatError(f"{path}: bad history row {row!r}: {exc}") from exc
    if not history:
        raise DataFormatError(f"{path}: empty history")
    emit_learning_curve(history, args.out)
    return EXIT_OK


_COMMANDS = {
    "split": _cmd_split,
    "oversample": _cmd_oversample,
    "gridsearch": _cmd_gridsearch,
    "evaluate": _cmd_evaluate,
    "stats": _cmd_stats,
    "curve": _cmd_curve,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - boundary: report and set the exit code
        print(f"run failure: {exc}", file=sys.stderr)
        return EXIT_RUN


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
