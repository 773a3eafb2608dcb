"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`.
"""

import itertools
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from simover.classifier import Hyperparams, fit_matrix, predict
from simover.data import dataset_stats, load_dataset, split_labeled_unlabeled
from simover.harness import ExperimentPlan, run_fold
from simover.metrics import (
    AVERAGINGS,
    MeasureSpec,
    accuracy,
    average_precision,
    coverage,
    hamming_loss,
    one_error,
    percent_improvement,
    prf1,
    ranking_loss,
    subset_accuracy,
)
from simover.oversampler import (
    OversampleConfig,
    oversample,
    performance_factor,
    required_instances,
    selection_probabilities,
)
from simover.similarity import initial_factor, update_factor
from synth import make_imbalanced_dataset, make_small_dataset
from test_classifier import finite_difference_gradient, separable_toy
from simover.classifier import loss_and_gradient

BEST_PARAMS = dict(
    balance_ratio=0.2,
    similarity_calc_type="safe_interval",
    batch_size=5,
    num_iterations=100,
    similarity_kind="euclidean",
)


def test_criterion_1_formula_unit_suite():
    # harmonic mean of precision and recall
    yt, yp = np.array([[1], [0]]), np.array([[1], [1]])
    p, r, f = prf1(yt, yp, "micro")
    assert (p, r) == (0.5, 1.0)
    assert abs(f - 2 * 0.5 * 1.0 / 1.5) < 1e-12

    # initial similarity factor (1/s)^0.5
    assert initial_factor(1.0) == 1.0
    assert abs(initial_factor(0.25) - 2.0) < 1e-12
    assert abs(initial_factor(0.64) - 1.25) < 1e-12

    # required instances, with and without the performance weight
    assert abs(required_instances(135, 0.2, 10, 1.0) - 34.0) < 1e-12
    assert abs(required_instances(135, 0.2, 10, 0.4) - 13.6) < 1e-12
    assert required_instances(135, 0.2, 50, 1.0) == 0.0

    # performance factor orientation
    assert performance_factor(1.0, "maximize") == 0.0
    assert abs(performance_factor(0.6, "maximize") - 0.4) < 1e-12
    assert performance_factor(0.3, "minimize") == 0.3

    # selection probabilities normalize needs
    needs = selection_probabilities([30.0, 10.0, 0.0])
    assert [n.selection_probability for n in needs] == [0.75, 0.25, 0.0]

    # factor updates
    assert update_factor(1.0, True, 0.5) == 1.0
    assert update_factor(1.0, False, 0.5) == 1.0
    assert abs(update_factor(1.25, True, 0.64) - 1.2548828125) < 1e-12
    assert abs(update_factor(1.25, False, 0.64) - 1.2451171875) < 1e-12

    # relative improvement
    assert abs(percent_improvement(0.5, 0.6) - 0.2) < 1e-12
    assert percent_improvement(0.37, 0.37) == 0.0
    reported = percent_improvement(0.5961, 0.6280)
    assert abs(reported - 0.0535) < 0.0005

    print("ACCEPTANCE 1 PASS: formula unit suite exact at 1e-12 "
          f"(reported improvement check {reported:.6f} within 0.0535 +/- 0.0005)")


def test_criterion_2_synthetic_oracle_experiment():
    dataset = make_imbalanced_dataset(dimension=16, seed=0)
    stats = dataset_stats(dataset)
    assert dataset.num_classes == 12
    assert abs(stats.cardinality - 1.2) < 0.05
    assert abs(stats.max_imbalance_ratio - 38.0) < 1.0

    measure = MeasureSpec("f1", "weighted")
    plan = ExperimentPlan(
        dataset_path="synthetic", labeled_fraction=0.05, k=5,
        grid={"balance_ratio": [0.2]}, measure=measure, seed=0,
        eval_policy="external_test",
    )
    config = OversampleConfig(
        measure=measure, seed=0, eval_policy="external_test", **BEST_PARAMS
    )
    improvements = []
    for fold in range(5):
        started = time.perf_counter()
        result, _ = run_fold(dataset, plan, fold, config)
        elapsed = time.perf_counter() - started
        assert elapsed < 60.0, f"fold {fold} took {elapsed:.1f}s"
        assert result.final_measure >= result.initial_measure, f"fold {fold} regressed"
        improvements.append(result.improvement)
    mean_improvement = sum(improvements) / len(improvements)
    assert mean_improvement > 0.0
    print(f"ACCEPTANCE 2 PASS: synthetic oracle experiment mean improvement "
          f"{mean_improvement:+.4f} over 5 folds, final >= initial on every fold")


def test_criterion_3_monotonicity_and_conservation_over_50_runs():
    rng = np.random.default_rng(2024)
    measures = [MeasureSpec("f1", "weighted"), MeasureSpec("f1", "micro"),
                MeasureSpec("hamming_loss")]
    violations = 0
    for run in range(50):
        n = int(rng.integers(40, 90))
        num_classes = int(rng.integers(2, 5))
        dimension = int(rng.integers(3, 7))
        dataset = make_small_dataset(n, num_classes, dimension, seed=run,
                                     noise=float(rng.uniform(0.4, 1.0)))
        fraction = float(rng.uniform(0.2, 0.4))
        labeled, pool = split_labeled_unlabeled(dataset, fraction, seed=run)
        spec = measures[run % len(measures)]
        config = OversampleConfig(
            balance_ratio=float(rng.choice([0.2, 0.3, 0.4, 0.5])),
            similarity_calc_type=str(rng.choice(["average", "safe_interval"])),
            batch_size=int(rng.choice([1, 2, 3, 5, 7])),
            num_iterations=int(rng.choice([10, 20, 50])),
            similarity_kind=str(rng.choice(["euclidean", "cosine", "jensen_shannon"])),
            measure=spec,
            seed=run,
            hyperparams=Hyperparams(epochs=60),
        )
        outcome = oversample(labeled, pool, config)

        accepted = [r.measure_value for r in outcome.history if r.accepted]
        trajectory = [outcome.initial_measure] + accepted
        for a, b in zip(trajectory, trajectory[1:]):
            ok = b > a if spec.orientation == "maximize" else b < a
            violations += 0 if ok else 1

        first = outcome.history[0]
        total = first.labeled_size + first.unlabeled_size
        removed = 0
        for rec in outcome.history[1:]:
            if not rec.accepted:
                removed += rec.candidate_count
            if rec.labeled_size + rec.unlabeled_size + removed != total:
                violations += 1
        if len(outcome.labeled) != len(labeled) + len(outcome.added):
            violations += 1
        if set(outcome.pool.ids()) & set(outcome.labeled.ids()):
            violations += 1
    assert violations == 0
    print("ACCEPTANCE 3 PASS: 50 randomized runs, zero monotonicity or "
          "bookkeeping violations")


def _random_valid_case(rng, n, num_classes):
    while True:
        yt = (rng.random((n, num_classes)) < 0.4).astype(int)
        rows = yt.sum(axis=1)
        if (rows > 0).all() and (rows < num_classes).all():
            return yt, rng.random((n, num_classes))


def test_criterion_4_metric_oracle_equivalence():
    tol = 1e-9
    matrices = [np.array(bits, dtype=int).reshape(2, 2)
                for bits in itertools.product([0, 1], repeat=4)]
    checked = 0
    for yt in matrices:
        for yp in matrices:
            assert abs(subset_accuracy(yt, yp)
                       - oracles.subset_accuracy(yt.tolist(), yp.tolist())) <= tol
            assert abs(hamming_loss(yt, yp)
                       - oracles.hamming_loss(yt.tolist(), yp.tolist())) <= tol
            assert abs(accuracy(yt, yp)
                       - oracles.accuracy(yt.tolist(), yp.tolist())) <= tol
            for averaging in AVERAGINGS:
                got = prf1(yt, yp, averaging)
                want = oracles.prf1(yt.tolist(), yp.tolist(), averaging)
                assert max(abs(g - w) for g, w in zip(got, want)) <= tol
            checked += 1
    rankable = [m for m in matrices if (m.sum(axis=1) > 0).all()]
    strict = [m for m in rankable if (m.sum(axis=1) < 2).all()]
    for p_src in matrices:
        p = p_src.astype(float)
        for yt in rankable:
            assert abs(one_error(yt, p) - oracles.one_error(yt.tolist(), p.tolist())) <= tol
            assert abs(coverage(yt, p) - oracles.coverage(yt.tolist(), p.tolist())) <= tol
        for yt in strict:
            assert abs(ranking_loss(yt, p)
                       - oracles.ranking_loss(yt.tolist(), p.tolist())) <= tol
            assert abs(average_precision(yt, p)
                       - oracles.average_precision(yt.tolist(), p.tolist())) <= tol

    rng = np.random.default_rng(77)
    for _ in range(200):
        yt, proba = _random_valid_case(rng, 8, 5)
        yp = (rng.random((8, 5)) < 0.5).astype(int)
        assert abs(subset_accuracy(yt, yp)
                   - oracles.subset_accuracy(yt.tolist(), yp.tolist())) <= tol
        assert abs(hamming_loss(yt, yp)
                   - oracles.hamming_loss(yt.tolist(), yp.tolist())) <= tol
        assert abs(accuracy(yt, yp) - oracles.accuracy(yt.tolist(), yp.tolist())) <= tol
        for averaging in AVERAGINGS:
            got = prf1(yt, yp, averaging)
            want = oracles.prf1(yt.tolist(), yp.tolist(), averaging)
            assert max(abs(g - w) for g, w in zip(got, want)) <= tol
        assert abs(one_error(yt, proba)
                   - oracles.one_error(yt.tolist(), proba.tolist())) <= tol
        assert abs(coverage(yt, proba)
                   - oracles.coverage(yt.tolist(), proba.tolist())) <= tol
        assert abs(ranking_loss(yt, proba)
                   - oracles.ranking_loss(yt.tolist(), proba.tolist())) <= tol
        assert abs(average_precision(yt, proba)
                   - oracles.average_precision(yt.tolist(), proba.tolist())) <= tol
    print(f"ACCEPTANCE 4 PASS: ten measures match brute-force oracles on "
          f"{checked} exhaustive 2x2 pairs and 200 random 8x5 cases at 1e-9")


def test_criterion_5_classifier_numerics():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(4, 14))
        d = int(rng.integers(2, 7))
        xb = np.hstack([rng.normal(size=(n, d)), np.ones((n, 1))])
        y = (rng.random(n) < 0.5).astype(float)
        w = rng.normal(scale=0.6, size=d + 1)
        _, analytic = loss_and_gradient(w, xb, y, 1e-4)
        numeric = finite_difference_gradient(w, xb, y, 1e-4)
        rel = np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)
        worst = max(worst, rel)
        assert rel < 1e-6
    x, y = separable_toy()
    model = fit_matrix(x, y)
    f1 = prf1(y.astype(int), predict(model, x), "weighted")[2]
    assert f1 == 1.0
    print(f"ACCEPTANCE 5 PASS: gradient check worst relative error {worst:.2e} "
          "< 1e-6 on 20 random instances; separable-toy training F1 = 1.0")


def test_criterion_6_factor_dynamics():
    assert update_factor(1.0, True, 0.7) == 1.0
    assert update_factor(1.0, False, 0.7) == 1.0
    rng = np.random.default_rng(6)
    for f in rng.uniform(1.01, 1.99, size=300):
        up = update_factor(f, True, 0.25)
        down = update_factor(f, False, 0.25)
        assert up > f or up == 2.0
        assert down < f
    for s in rng.uniform(0.25, 1.0, size=300):
        assert abs(s * initial_factor(s) - math.sqrt(s)) < 1e-12
    print("ACCEPTANCE 6 PASS: fixed point at f=1, correct update directions on "
          "(1,2), threshold identity sqrt(s) at 1e-12 where the cap is inactive")


def test_criterion_7_desk_scale_runtime():
    dataset = make_imbalanced_dataset(dimension=1024, seed=1)
    assert len(dataset) == 3399 and dataset.dimension == 1024
    labeled, pool = split_labeled_unlabeled(dataset, 0.05, seed=2)
    config = OversampleConfig(
        measure=MeasureSpec("f1", "weighted"), seed=0, **BEST_PARAMS
    )
    started = time.perf_counter()
    outcome = oversample(labeled, pool, config)
    elapsed = time.perf_counter() - started
    assert elapsed < 300.0
    assert outcome.history[-1].iteration <= config.num_iterations
    print(f"ACCEPTANCE 7 PASS: 100 iterations on 3,399 x 1,024 finished in "
          f"{elapsed:.1f}s (< 300s budget)")


OPP115_PATH = os.environ.get(
    "SIMOVER_OPP115_EMBEDDINGS",
    str(Path(__file__).resolve().parent.parent / "data" / "opp115_embeddings.jsonl"),
)


@pytest.mark.skipif(
    not Path(OPP115_PATH).exists(),
    reason=(
        "requires exporter-produced OPP-115 embeddings; point "
        "SIMOVER_OPP115_EMBEDDINGS at the instance file to run this check"
    ),
)
def test_criterion_8_reproduction_on_exported_embeddings():
    dataset = load_dataset(OPP115_PATH, "labeled")
    measure = MeasureSpec("f1", "weighted")
    plan = ExperimentPlan(
        dataset_path=OPP115_PATH,
        labeled_fraction=135 / (len(dataset) * 4 // 5),
        k=5,
        grid={"balance_ratio": [0.2]},
        measure=measure,
        seed=0,
        eval_policy="external_test",
    )
    config = OversampleConfig(
        measure=measure, seed=0, eval_policy="external_test", **BEST_PARAMS
    )
    improvements = []
    for fold in range(5):
        result, _ = run_fold(dataset, plan, fold, config)
        improvements.append(result.improvement)
    mean_improvement = sum(improvements) / len(improvements)
    positive_folds = sum(1 for v in improvements if v > 0)
    assert mean_improvement >= 0.0
    assert positive_folds >= 3
    print(f"ACCEPTANCE 8 PASS: exported-embedding reproduction mean improvement "
          f"{mean_improvement:+.4f}, {positive_folds}/5 folds strictly positive")
