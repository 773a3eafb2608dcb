"""Experiment orchestration: cross-validated folds, baseline/final classifier
comparison, grid search over the loop parameters, and the learning curve.

Each fold takes the k-fold test partition out first, then splits the training
partition into the labeled seed set and the unlabeled pool, so the test set is
never visible to the mining loop except under the explicit "external_test"
reproduction policy.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import Hyperparams, fit_matrix, predict_proba
from .data import LabeledSet, kfold_split, split_labeled_unlabeled
from .metrics import MeasureSpec, compute_measure, percent_improvement
from .oversampler import OversampleConfig, OversampleOutcome, oversample

logger = logging.getLogger(__name__)

GRID_PARAMETERS = (
    "balance_ratio",
    "similarity_calc_type",
    "batch_size",
    "num_iterations",
    "similarity_kind",
)

DEFAULT_GRID = {
    "balance_ratio": [0.2, 0.3, 0.4, 0.5],
    "similarity_calc_type": ["average", "safe_interval"],
    "batch_size": [1, 2, 3, 5, 7],
    "num_iterations": [50, 100, 200, 500],
    "similarity_kind": ["euclidean", "cosine", "jensen_shannon"],
}


@dataclass(frozen=True)
class ExperimentPlan:
    dataset_path: str
    labeled_fraction: float
    k: int
    grid: dict
    measure: MeasureSpec = MeasureSpec("f1", "weighted")
    seed: int = 0
    eval_policy: str = "internal_validation"
    validation_fraction: float = 0.2
    hyperparams: Hyperparams = Hyperparams()
    output_dir: str | None = None
    workers: int = 1

    def validate(self) -> None:
        if self.k < 2:
            raise ValueError(f"k must be at least 2, got {self.k}")
        if not self.grid:
            raise ValueError("parameter grid must be nonempty")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        for key in self.grid:
            if key not in GRID_PARAMETERS:
                raise ValueError(f"unknown grid parameter {key!r}")
            if not self.grid[key]:
                raise ValueError(f"grid parameter {key!r} has no values")


@dataclass(frozen=True)
class FoldResult:
    fold: int
    config_index: int
    initial_measure: float
    final_measure: float
    improvement: float | None
    instances_added: int
    wall_seconds: float
    error: str | None = None


@dataclass(frozen=True)
class ConfigAggregate:
    config_index: int
    config: OversampleConfig
    mean_improvement: float | None
    std_improvement: float | None
    folds_completed: int
    complete: bool


@dataclass(frozen=True)
class ExperimentResult:
    records: tuple[FoldResult, ...]
    aggregates: tuple[ConfigAggregate, ...]
    best_config_index: int | None


def expand_grid(plan: ExperimentPlan) -> list[OversampleConfig]:
    """All grid combinations in deterministic lexicographic order over the
    parameter lists (balance ratio varies slowest, similarity kind fastest)."""
    plan.validate()
    values = [plan.grid.get(key, [getattr(OversampleConfig(), key)]) for key in GRID_PARAMETERS]
    configs = []
    for combo in itertools.product(*values):
        kwargs = dict(zip(GRID_PARAMETERS, combo))
        configs.append(
            OversampleConfig(
                measure=plan.measure,
                seed=plan.seed,
                eval_policy=plan.eval_policy,
                validation_fraction=plan.validation_fraction,
                hyperparams=plan.hyperparams,
                **kwargs,
            )
        )
    return configs


def _measure_of(model, x, y, spec: MeasureSpec) -> float:
    proba = predict_proba(model, x)
    preds = (proba >= 0.5).astype(np.int8)
    return compute_measure(spec, y, preds, proba)


def run_fold(
    dataset: LabeledSet,
    plan: ExperimentPlan,
    fold_index: int,
    config: OversampleConfig,
    config_index: int = 0,
) -> tuple[FoldResult, OversampleOutcome]:
    """One (fold, config) run: build the partitions, train the baseline, run
    the mining loop, train the final classifier, and compare on the test set.

    Timing covers the oversample call only.
    """
    folds = kfold_split(dataset, plan.k, plan.seed)
    train_idx, test_idx = folds[fold_index]
    train_set = dataset.select(train_idx)
    test_set = dataset.select(test_idx)
    labeled, pool = split_labeled_unlabeled(
        train_set, plan.labeled_fraction, [plan.seed, fold_index]
    )
    test_ids = set(test_set.ids())
    assert not test_ids & set(labeled.ids()) and not test_ids & set(pool.ids())

    spec = plan.measure
    test_x = test_set.vector_matrix()
    test_y = test_set.label_matrix().astype(np.int64)
    baseline = fit_matrix(
        labeled.vector_matrix(), labeled.label_matrix().astype(np.float64), plan.hyperparams
    )
    p0 = _measure_of(baseline, test_x, test_y, spec)

    eval_set = test_set if config.eval_policy == "external_test" else None
    started = time.perf_counter()
    outcome = oversample(labeled, pool, config, eval_set)
    wall = time.perf_counter() - started

    final = fit_matrix(
        outcome.labeled.vector_matrix(),
        outcome.labeled.label_matrix().astype(np.float64),
        plan.hyperparams,
    )
    p1 = _measure_of(final, test_x, test_y, spec)
    improvement = percent_improvement(p0, p1) if p0 > 0 else None
    result = FoldResult(
        fold=fold_index,
        config_index=config_index,
        initial_measure=p0,
        final_measure=p1,
        improvement=improvement,
        instances_added=len(outcome.added),
        wall_seconds=wall,
    )
    return result, outcome


def _aggregate(config_index: int, config: OversampleConfig, results: list[FoldResult], k: int) -> ConfigAggregate:
    ok = [r for r in results if r.error is None and r.improvement is not None]
    values = [r.improvement for r in ok]
    if values:
        mean = sum(values) / len(values)
        if len(values) > 1:
            std = math.sqrt(sum((v - mean) ** 2 for v in values) / (len(values) - 1))
        else:
            std = 0.0
    else:
        mean = None
        std = None
    return ConfigAggregate(
        config_index=config_index,
        config=config,
        mean_improvement=mean,
        std_improvement=std,
        folds_completed=len([r for r in results if r.error is None]),
        complete=len([r for r in results if r.error is None]) == k,
    )


def _run_fold_task(dataset, plan, fold, config, config_index) -> FoldResult:
    """One (config, fold) run with failures captured in the result record."""
    try:
        result, _ = run_fold(dataset, plan, fold, config, config_index)
        return result
    except Exception as exc:  # noqa: BLE001 - fold failures must not kill the search
        logger.error("config %d fold %d failed: %s", config_index, fold, exc)
        return FoldResult(
            fold=fold,
            config_index=config_index,
            initial_measure=float("nan"),
            final_measure=float("nan"),
            improvement=None,
            instances_added=0,
            wall_seconds=0.0,
            error=str(exc),
        )


def grid_search(plan: ExperimentPlan, dataset: LabeledSet) -> ExperimentResult:
    """Every grid configuration on every fold. A failing fold is recorded and
    marks its configuration incomplete; the search continues.

    Runs execute concurrently when plan.workers > 1; results merge by
    (config, fold) key, so the outcome does not depend on completion order.
    The best configuration maximizes mean improvement, ties broken by the
    lowest configuration index.
    """
    configs = expand_grid(plan)
    tasks = [
        (fold, ci, config) for ci, config in enumerate(configs) for fold in range(plan.k)
    ]
    by_key: dict[tuple[int, int], FoldResult] = {}
    if plan.workers > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            futures = {
                (ci, fold): pool.submit(_run_fold_task, dataset, plan, fold, config, ci)
                for fold, ci, config in tasks
            }
            for key, future in futures.items():
                by_key[key] = future.result()
    else:
        for fold, ci, config in tasks:
            by_key[(ci, fold)] = _run_fold_task(dataset, plan, fold, config, ci)

    records: list[FoldResult] = []
    aggregates: list[ConfigAggregate] = []
    for ci, config in enumerate(configs):
        per_config = [by_key[(ci, fold)] for fold in range(plan.k)]
        records.extend(per_config)
        aggregates.append(_aggregate(ci, config, per_config, plan.k))
    best = None
    best_mean = None
    for agg in aggregates:
        if agg.mean_improvement is None:
            continue
        if best_mean is None or agg.mean_improvement > best_mean:
            best = agg.config_index
            best_mean = agg.mean_improvement
    return ExperimentResult(tuple(records), tuple(aggregates), best)


def emit_learning_curve(history, path=None) -> list[tuple[int, float]]:
    """Rows of (cumulative instances added, gate measure value): the baseline
    row first, then one row per accepted iteration. Optionally written as CSV."""
    if not history:
        raise ValueError("cannot build a learning curve from an empty history")
    rows = [(0, history[0].measure_value)]
    cumulative = 0
    for rec in history[1:]:
        if rec.accepted:
            cumulative += rec.candidate_count
            rows.append((cumulative, rec.measure_value))
    if path is not None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["instances_added", "measure"])
            for added, measure in rows:
                writer.writerow([added, repr(measure)])
    return rows


def write_runs_csv(result: ExperimentResult, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["config_index", "fold", "initial_measure", "final_measure",
             "improvement", "instances_added", "wall_seconds", "error"]
        )
        for r in result.records:
            writer.writerow(
                [
                    r.config_index,
                    r.fold,
                    repr(r.initial_measure),
                    repr(r.final_measure),
                    "" if r.improvement is None else repr(r.improvement),
                    r.instances_added,
                    repr(r.wall_seconds),
                    r.error or "",
                ]
            )


def write_aggregates_csv(result: ExperimentResult, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["config_index", "balance_ratio", "similarity_calc_type", "batch_size",
             "num_iterations", "similarity_kind", "mean_improvement", "std_improvement",
             "folds_completed", "complete"]
        )
        for a in result.aggregates:
            c = a.config
            writer.writerow(
                [
                    a.config_index,
                    c.balance_ratio,
                    c.similarity_calc_type,
                    c.batch_size,
                    c.num_iterations,
                    c.similarity_kind,
                    "" if a.mean_improvement is None else repr(a.mean_improvement),
                    "" if a.std_improvement is None else repr(a.std_improvement),
                    a.folds_completed,
                    int(a.complete),
                ]
            )


def write_best_config(result: ExperimentResult, path) -> dict | None:
    if result.best_config_index is None:
        payload = None
    else:
        agg = result.aggregates[result.best_config_index]
        c = agg.config
        payload = {
            "config_index": agg.config_index,
            "balance_ratio": c.balance_ratio,
            "similarity_calc_type": c.similarity_calc_type,
            "batch_size": c.batch_size,
            "num_iterations": c.num_iterations,
            "similarity_kind": c.similarity_kind,
            "mean_improvement": agg.mean_improvement,
            "std_improvement": agg.std_improvement,
        }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return payload
