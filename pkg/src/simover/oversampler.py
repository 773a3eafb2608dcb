"""The improvement-gated oversampling loop.

Starting from a labeled set and an unlabeled pool, each iteration:

  1. derives per-class instance needs from the class imbalance and the latest
     accepted classifier's per-class performance,
  2. draws a class in proportion to those needs,
  3. scans the shuffled pool for instances whose similarity to the class
     clears the class's adaptive threshold,
  4. pseudo-labels the batch against every class threshold,
  5. retrains the classifier with the batch and keeps it only if the chosen
     measure strictly improves on the evaluation split,
  6. tightens the class's threshold factor on acceptance, loosens it on
     rejection, and removes the batch from the pool either way.

The evaluation split is an internal stratified validation slice by default;
"external_test" mode gates on a caller-supplied set instead.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import Hyperparams, OvrLinearModel, fit_matrix, predict_proba
from .data import EmbeddedInstance, LabeledSet, UnlabeledPool, stratified_partition
from .metrics import (
    MeasureSpec,
    compute_measure,
    per_class_prf1,
    unit_interval_value,
)
from .similarity import (
    CALC_TYPES,
    SIMILARITY_KINDS,
    ProfileSet,
    build_profiles,
    similarity_to_members,
)

logger = logging.getLogger(__name__)

EVAL_POLICIES = ("internal_validation", "external_test")


@dataclass(frozen=True)
class OversampleConfig:
    """Tunable parameters of the oversampling loop."""

    balance_ratio: float = 0.2
    similarity_calc_type: str = "safe_interval"
    batch_size: int = 5
    num_iterations: int = 100
    similarity_kind: str = "euclidean"
    measure: MeasureSpec = MeasureSpec("f1", "weighted")
    seed: int = 0
    eval_policy: str = "internal_validation"
    validation_fraction: float = 0.2
    hyperparams: Hyperparams = Hyperparams()

    def validate(self) -> None:
        if not 0.0 < self.balance_ratio <= 1.0:
            raise ValueError(f"balance_ratio must lie in (0, 1], got {self.balance_ratio}")
        if self.similarity_calc_type not in CALC_TYPES:
            raise ValueError(f"unknown similarity calc type {self.similarity_calc_type!r}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.num_iterations < 0:
            raise ValueError(f"num_iterations must be nonnegative, got {self.num_iterations}")
        if self.similarity_kind not in SIMILARITY_KINDS:
            raise ValueError(f"unknown similarity kind {self.similarity_kind!r}")
        if self.eval_policy not in EVAL_POLICIES:
            raise ValueError(f"unknown eval policy {self.eval_policy!r}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError(
                f"validation_fraction must lie in (0, 1), got {self.validation_fraction}"
            )


@dataclass(frozen=True)
class ClassNeed:
    class_index: int
    required_count: float
    selection_probability: float


@dataclass(frozen=True)
class MetricHistoryRecord:
    """One loop iteration: what was tried, what happened, and the state after."""

    iteration: int
    selected_class: int | None
    candidate_count: int
    accepted: bool
    measure_value: float
    factors: tuple[float, ...]
    labeled_size: int
    unlabeled_size: int


@dataclass(frozen=True)
class OversampleOutcome:
    labeled: LabeledSet
    pool: UnlabeledPool
    history: tuple[MetricHistoryRecord, ...]
    added: dict  # instance id -> assigned label vector

    @property
    def initial_measure(self) -> float:
        return self.history[0].measure_value

    @property
    def final_measure(self) -> float:
        accepted = [r.measure_value for r in self.history if r.accepted]
        return accepted[-1] if accepted else self.initial_measure


def performance_factor(measure_value: float, orientation: str) -> float:
    """Weight in [0, 1] that grows as the measure worsens: 1 - value for
    maximized measures, the value itself for minimized ones."""
    if not 0.0 <= measure_value <= 1.0:
        raise ValueError(f"measure value must lie in [0, 1], got {measure_value}")
    if orientation == "maximize":
        return 1.0 - measure_value
    if orientation == "minimize":
        return measure_value
    raise ValueError(f"unknown orientation {orientation!r}")


def required_instances(n: int, r: float, n_i: int, rho: float) -> float:
    """Instances still needed to push class i to the balance ratio, scaled by
    the performance factor: max(0, (n*r - n_i) * 2 * rho)."""
    return max(0.0, (n * r - n_i) * 2.0 * rho)


def selection_probabilities(needs) -> list[ClassNeed]:
    """Normalize per-class needs into selection probabilities. All-zero needs
    yield all-zero probabilities (the loop treats that as 'balanced')."""
    needs = np.asarray(needs, dtype=np.float64)
    if (needs < 0).any():
        raise ValueError("needs must be nonnegative")
    total = needs.sum()
    probs = needs / total if total > 0 else np.zeros_like(needs)
    return [
        ClassNeed(c, float(needs[c]), float(probs[c])) for c in range(needs.shape[0])
    ]


def draw_class(rng: np.random.Generator, probabilities) -> int:
    """Seeded categorical draw over class indices."""
    p = np.asarray(probabilities, dtype=np.float64)
    return int(rng.choice(p.shape[0], p=p / p.sum()))


def find_candidates(
    pool: list[EmbeddedInstance],
    labeled: LabeledSet,
    class_index: int,
    profile_set: ProfileSet,
    batch_size: int,
    rng: np.random.Generator,
) -> list[EmbeddedInstance]:
    """Scan the shuffled pool in order, collecting instances whose similarity
    to the class reaches its threshold, until the batch is full."""
    if not pool:
        return []
    members = labeled.class_members(class_index)
    if members.shape[0] == 0:
        raise ValueError(f"class {class_index} has no labeled members to compare against")
    threshold = profile_set[class_index].threshold
    order = rng.permutation(len(pool))
    out: list[EmbeddedInstance] = []
    for idx in order:
        inst = pool[int(idx)]
        if similarity_to_members(inst.vector, members, profile_set.kind) >= threshold:
            out.append(inst)
            if len(out) >= batch_size:
                break
    return out


def propose_labels(
    candidates: list[EmbeddedInstance],
    labeled: LabeledSet,
    profile_set: ProfileSet,
    selected_class: int,
) -> list[np.ndarray]:
    """Pseudo-label each candidate: bit j is set when its similarity to class j
    reaches that class's threshold; the selected class's bit is always set."""
    if not candidates:
        raise ValueError("propose_labels requires a nonempty candidate list")
    member_matrices = [labeled.class_members(c) for c in range(labeled.num_classes)]
    out = []
    for inst in candidates:
        labels = np.zeros(labeled.num_classes, dtype=np.int8)
        for c in range(labeled.num_classes):
            if member_matrices[c].shape[0] == 0:
                continue
            sim = similarity_to_members(inst.vector, member_matrices[c], profile_set.kind)
            if sim >= profile_set[c].threshold:
                labels[c] = 1
        labels[selected_class] = 1
        out.append(labels)
    return out


def improvement_step(
    train_x: np.ndarray,
    train_y: np.ndarray,
    candidate_x: np.ndarray,
    candidate_y: np.ndarray,
    eval_x: np.ndarray,
    eval_y: np.ndarray,
    spec: MeasureSpec,
    best_so_far: float,
    hp: Hyperparams,
) -> tuple[bool, float, OvrLinearModel]:
    """Retrain with the candidates included and accept only a strict
    improvement of the measure on the evaluation split."""
    x = np.vstack([train_x, candidate_x])
    y = np.vstack([train_y, candidate_y])
    model = fit_matrix(x, y, hp)
    value = _measure_on(model, eval_x, eval_y, spec)
    if spec.orientation == "maximize":
        accepted = value > best_so_far
    else:
        accepted = value < best_so_far
    return accepted, value, model


def _measure_on(model: OvrLinearModel, x: np.ndarray, y: np.ndarray, spec: MeasureSpec) -> float:
    proba = predict_proba(model, x)
    preds = (proba >= 0.5).astype(np.int8)
    return compute_measure(spec, y, preds, proba)


def _per_class_rho(
    model: OvrLinearModel, x: np.ndarray, y: np.ndarray, spec: MeasureSpec, num_classes: int
) -> np.ndarray:
    """Performance factor per class: decomposed for precision/recall/f1,
    otherwise the global value everywhere."""
    proba = predict_proba(model, x)
    preds = (proba >= 0.5).astype(np.int8)
    if spec.name in ("precision", "recall", "f1"):
        p, r, f = per_class_prf1(y, preds)
        values = {"precision": p, "recall": r, "f1": f}[spec.name]
        return np.array([performance_factor(float(v), spec.orientation) for v in values])
    value = compute_measure(spec, y, preds, proba)
    value = unit_interval_value(spec, value, num_classes)
    rho = performance_factor(value, spec.orientation)
    return np.full(num_classes, rho)


def oversample(
    labeled: LabeledSet,
    pool: UnlabeledPool,
    config: OversampleConfig,
    eval_set: LabeledSet | None = None,
) -> OversampleOutcome:
    """Run the full mining loop; returns the grown labeled set, the remaining
    pool, the per-iteration history, and the accepted instances' labels.

    With eval_policy="internal_validation" a stratified validation slice is
    carved from `labeled` for gating; with "external_test" the caller-supplied
    eval_set is used (reproduction mode: the gate then sees that set).
    """
    config.validate()
    if len(labeled) == 0:
        raise ValueError("oversample requires a nonempty labeled set")
    if labeled.dimension != pool.dimension or labeled.num_classes != pool.num_classes:
        raise ValueError("labeled set and pool disagree on dimension or classes")
    overlap = set(labeled.ids()) & set(pool.ids())
    if overlap:
        raise ValueError(f"labeled set and pool share ids, e.g. {sorted(overlap)[:3]}")

    rng = np.random.default_rng(config.seed)
    if config.eval_policy == "external_test":
        if eval_set is None:
            raise ValueError("eval_policy 'external_test' requires an eval_set")
        working = labeled
    else:
        if eval_set is not None:
            raise ValueError("eval_set is only accepted under eval_policy 'external_test'")
        validation, working = stratified_partition(
            labeled, config.validation_fraction, rng
        )
        eval_set = validation
    eval_x = eval_set.vector_matrix()
    eval_y = eval_set.label_matrix().astype(np.int64)

    profiles = build_profiles(working, config.similarity_kind, config.similarity_calc_type)

    spec = config.measure
    hp = config.hyperparams
    work_x = working.vector_matrix()
    work_y = working.label_matrix().astype(np.float64)
    baseline = fit_matrix(work_x, work_y, hp)
    best = _measure_on(baseline, eval_x, eval_y, spec)
    rho = _per_class_rho(baseline, eval_x, eval_y, spec, labeled.num_classes)

    pool_left = list(pool.instances)
    added: dict = {}
    accepted_instances: list[EmbeddedInstance] = []
    history = [
        MetricHistoryRecord(
            iteration=0,
            selected_class=None,
            candidate_count=0,
            accepted=False,
            measure_value=best,
            factors=profiles.factors(),
            labeled_size=len(working),
            unlabeled_size=len(pool_left),
        )
    ]

    current = working
    for iteration in range(1, config.num_iterations + 1):
        if not pool_left:
            logger.info("pool exhausted after %d iterations", iteration - 1)
            break
        counts = current.class_counts()
        needs = np.zeros(labeled.num_classes)
        for c in range(labeled.num_classes):
            if counts[c] == 0:
                continue  # no members to compare candidates against
            needs[c] = required_instances(
                len(current), config.balance_ratio, int(counts[c]), float(rho[c])
            )
        class_needs = selection_probabilities(needs)
        probs = np.array([cn.selection_probability for cn in class_needs])
        if probs.sum() == 0.0:
            logger.info("all class needs are zero; stopping as balanced")
            break
        selected = draw_class(rng, probs)

        candidates = find_candidates(
            pool_left, current, selected, profiles, config.batch_size, rng
        )
        if candidates:
            labels = propose_labels(candidates, current, profiles, selected)
            cand_x = np.stack([c.vector for c in candidates])
            cand_y = np.stack(labels).astype(np.float64)
            accepted, value, model = improvement_step(
                current.vector_matrix(),
                current.label_matrix().astype(np.float64),
                cand_x,
                cand_y,
                eval_x,
                eval_y,
                spec,
                best,
                hp,
            )
            if accepted:
                new_instances = [
                    EmbeddedInstance(c.id, c.vector, lab)
                    for c, lab in zip(candidates, labels)
                ]
                accepted_instances.extend(new_instances)
                current = current.with_instances(current.instances + tuple(new_instances))
                for inst, lab in zip(candidates, labels):
                    added[inst.id] = lab
                best = value
                rho = _per_class_rho(model, eval_x, eval_y, spec, labeled.num_classes)
            candidate_ids = {c.id for c in candidates}
            pool_left = [p for p in pool_left if p.id not in candidate_ids]
            measured = value
        else:
            accepted = False
            measured = best
        profiles[selected].update(accepted)
        history.append(
            MetricHistoryRecord(
                iteration=iteration,
                selected_class=selected,
                candidate_count=len(candidates),
                accepted=accepted,
                measure_value=measured,
                factors=profiles.factors(),
                labeled_size=len(current),
                unlabeled_size=len(pool_left),
            )
        )

    new_labeled = labeled.with_instances(labeled.instances + tuple(accepted_instances))
    remaining = UnlabeledPool(
        pool.dimension, pool.num_classes, pool.class_names, tuple(pool_left)
    )
    return OversampleOutcome(new_labeled, remaining, tuple(history), added)


def write_history_csv(history, num_classes: int, path) -> None:
    """Per-iteration trace: iteration, class, candidates, accepted flag,
    measure, set sizes, then one factor column per class."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["iteration", "selected_class", "candidate_count", "accepted", "measure",
             "labeled_size", "unlabeled_size"]
            + [f"factor_{c}" for c in range(num_classes)]
        )
        for rec in history:
            writer.writerow(
                [
                    rec.iteration,
                    "" if rec.selected_class is None else rec.selected_class,
                    rec.candidate_count,
                    int(rec.accepted),
                    repr(rec.measure_value),
                    rec.labeled_size,
                    rec.unlabeled_size,
                ]
                + [repr(f) for f in rec.factors]
            )


def write_summary(outcome: OversampleOutcome, wall_seconds: float, path) -> dict:
    """Initial/final measure, relative improvement, additions, and timing."""
    p0 = outcome.initial_measure
    p1 = outcome.final_measure
    summary = {
        "initial_measure": p0,
        "final_measure": p1,
        "improvement": (p1 - p0) / p0 if p0 > 0 else None,
        "instances_added": len(outcome.added),
        "wall_clock_seconds": wall_seconds,
    }
    Path(path).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary
