"""Evaluation measures for multi-label classifiers and label rankings.

Classification measures compare binary prediction matrices against truth;
ranking measures score a probability matrix. Ranks are 1-based and descending;
tied scores share the worst rank of their tied block (coverage, average
precision), count half (ranking loss), or resolve to the lowest class index
(one-error's argmax). A 0/0 precision or recall is defined as 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MEASURE_NAMES = (
    "subset_accuracy",
    "accuracy",
    "hamming_loss",
    "precision",
    "recall",
    "f1",
    "one_error",
    "coverage",
    "ranking_loss",
    "average_precision",
)
AVERAGED_MEASURES = ("precision", "recall", "f1")
RANKING_MEASURES = ("one_error", "coverage", "ranking_loss", "average_precision")
MINIMIZED_MEASURES = ("hamming_loss", "one_error", "coverage", "ranking_loss")
AVERAGINGS = ("micro", "macro", "weighted", "samples")


@dataclass(frozen=True)
class MeasureSpec:
    """A measure name, its averaging scheme where applicable, and orientation."""

    name: str
    averaging: str | None = None

    def __post_init__(self):
        if self.name not in MEASURE_NAMES:
            raise ValueError(f"unknown measure {self.name!r}")
        if self.name in AVERAGED_MEASURES:
            if self.averaging not in AVERAGINGS:
                raise ValueError(
                    f"measure {self.name!r} requires averaging from {AVERAGINGS}"
                )
        elif self.averaging is not None:
            raise ValueError(f"measure {self.name!r} does not take an averaging scheme")

    @property
    def orientation(self) -> str:
        return "minimize" if self.name in MINIMIZED_MEASURES else "maximize"

    @property
    def key(self) -> str:
        return self.name if self.averaging is None else f"{self.name}.{self.averaging}"

    @property
    def needs_proba(self) -> bool:
        return self.name in RANKING_MEASURES


@dataclass(frozen=True)
class EvaluationReport:
    """Computed measure values plus the shape of the evaluated data."""

    n_samples: int
    num_classes: int
    values: dict
    zero_division_count: int = 0

    def to_dict(self) -> dict:
        out = dict(self.values)
        out["n_samples"] = self.n_samples
        out["num_classes"] = self.num_classes
        out["zero_division_count"] = self.zero_division_count
        return out


def _as_binary(y, name: str) -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d matrix, got shape {arr.shape}")
    return arr.astype(np.int64)


def _check_pair(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    yt = _as_binary(y_true, "y_true")
    yp = _as_binary(y_pred, "y_pred")
    if yt.shape != yp.shape:
        raise ValueError(f"shape mismatch: {yt.shape} vs {yp.shape}")
    return yt, yp


def _check_proba(y_true, proba, need_negative: bool) -> tuple[np.ndarray, np.ndarray]:
    yt = _as_binary(y_true, "y_true")
    p = np.asarray(proba, dtype=np.float64)
    if yt.shape != p.shape:
        raise ValueError(f"shape mismatch: {yt.shape} vs {p.shape}")
    row_pos = yt.sum(axis=1)
    if (row_pos == 0).any():
        raise ValueError("every row must have at least one positive label")
    if need_negative and (row_pos == yt.shape[1]).any():
        raise ValueError("every row must have at least one negative label")
    return yt, p


def subset_accuracy(y_true, y_pred) -> float:
    """Fraction of rows whose entire label vector is predicted exactly."""
    yt, yp = _check_pair(y_true, y_pred)
    return float(np.mean(np.all(yt == yp, axis=1)))


def hamming_loss(y_true, y_pred) -> float:
    """Fraction of individual label cells predicted incorrectly."""
    yt, yp = _check_pair(y_true, y_pred)
    return float(np.mean(yt != yp))


def accuracy(y_true, y_pred) -> float:
    """Fraction of individual label cells predicted correctly."""
    return 1.0 - hamming_loss(y_true, y_pred)


def _safe_div(num: float, den: float) -> tuple[float, int]:
    if den == 0.0:
        return 0.0, 1
    return num / den, 0


def _f1_of(p: float, r: float) -> float:
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def _prf1_counted(y_true, y_pred, averaging: str) -> tuple[float, float, float, int]:
    yt, yp = _check_pair(y_true, y_pred)
    if averaging not in AVERAGINGS:
        raise ValueError(f"unknown averaging {averaging!r}")
    zero_divs = 0
    if averaging == "samples":
        precisions, recalls, f1s = [], [], []
        for i in range(yt.shape[0]):
            tp = int(np.sum((yt[i] == 1) & (yp[i] == 1)))
            p, z1 = _safe_div(tp, int(yp[i].sum()))
            r, z2 = _safe_div(tp, int(yt[i].sum()))
            zero_divs += z1 + z2
            precisions.append(p)
            recalls.append(r)
            f1s.append(_f1_of(p, r))
        return float(np.mean(precisions)), float(np.mean(recalls)), float(np.mean(f1s)), zero_divs

    tp = ((yt == 1) & (yp == 1)).sum(axis=0).astype(np.float64)
    fp = ((yt == 0) & (yp == 1)).sum(axis=0).astype(np.float64)
    fn = ((yt == 1) & (yp == 0)).sum(axis=0).astype(np.float64)
    if averaging == "micro":
        p, z1 = _safe_div(tp.sum(), tp.sum() + fp.sum())
        r, z2 = _safe_div(tp.sum(), tp.sum() + fn.sum())
        return p, r, _f1_of(p, r), z1 + z2

    per_p, per_r, per_f = [], [], []
    for c in range(yt.shape[1]):
        p, z1 = _safe_div(tp[c], tp[c] + fp[c])
        r, z2 = _safe_div(tp[c], tp[c] + fn[c])
        zero_divs += z1 + z2
        per_p.append(p)
        per_r.append(r)
        per_f.append(_f1_of(p, r))
    if averaging == "macro":
        return float(np.mean(per_p)), float(np.mean(per_r)), float(np.mean(per_f)), zero_divs
    support = yt.sum(axis=0).astype(np.float64)
    if support.sum() == 0.0:
        return 0.0, 0.0, 0.0, zero_divs + 1
    weights = support / support.sum()
    return (
        float(np.dot(weights, per_p)),
        float(np.dot(weights, per_r)),
        float(np.dot(weights, per_f)),
        zero_divs,
    )


def prf1(y_true, y_pred, averaging: str) -> tuple[float, float, float]:
    """Precision, recall, and their harmonic mean under one averaging scheme.

    micro pools TP/FP/FN over all cells; macro is the unweighted class mean;
    weighted weights classes by support; samples averages per-row values.
    """
    p, r, f, _ = _prf1_counted(y_true, y_pred, averaging)
    return p, r, f


def per_class_prf1(y_true, y_pred) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Binary precision, recall, and harmonic mean per class (0/0 -> 0)."""
    yt, yp = _check_pair(y_true, y_pred)
    tp = ((yt == 1) & (yp == 1)).sum(axis=0).astype(np.float64)
    fp = ((yt == 0) & (yp == 1)).sum(axis=0).astype(np.float64)
    fn = ((yt == 1) & (yp == 0)).sum(axis=0).astype(np.float64)
    p = np.divide(tp, tp + fp, out=np.zeros_like(tp), where=(tp + fp) > 0)
    r = np.divide(tp, tp + fn, out=np.zeros_like(tp), where=(tp + fn) > 0)
    f = np.divide(2 * p * r, p + r, out=np.zeros_like(tp), where=(p + r) > 0)
    return p, r, f


def _descending_ranks(row: np.ndarray) -> np.ndarray:
    """1-based rank of every score; tied scores share the block's worst rank."""
    return (row[None, :] >= row[:, None]).sum(axis=1)


def one_error(y_true, proba) -> float:
    """Fraction of rows whose single top-scored label is not a true label.

    Argmax ties resolve to the lowest class index.
    """
    yt, p = _check_proba(y_true, proba, need_negative=False)
    top = p.argmax(axis=1)
    return float(np.mean(yt[np.arange(yt.shape[0]), top] == 0))


def coverage(y_true, proba) -> float:
    """Mean depth down the descending score ranking needed to reach every true
    label; a perfect ranking scores the row's label count."""
    yt, p = _check_proba(y_true, proba, need_negative=False)
    depths = []
    for i in range(yt.shape[0]):
        ranks = _descending_ranks(p[i])
        depths.append(ranks[yt[i] == 1].max())
    return float(np.mean(depths))


def ranking_loss(y_true, proba) -> float:
    """Mean fraction of (relevant, irrelevant) label pairs ordered wrongly;
    a tied pair counts half."""
    yt, p = _check_proba(y_true, proba, need_negative=True)
    losses = []
    for i in range(yt.shape[0]):
        rel = p[i][yt[i] == 1]
        irr = p[i][yt[i] == 0]
        wrong = (rel[:, None] < irr[None, :]).sum() + 0.5 * (rel[:, None] == irr[None, :]).sum()
        losses.append(wrong / (rel.size * irr.size))
    return float(np.mean(losses))


def average_precision(y_true, proba) -> float:
    """Mean over rows of the mean precision at each true label's rank."""
    yt, p = _check_proba(y_true, proba, need_negative=True)
    scores = []
    for i in range(yt.shape[0]):
        ranks = _descending_ranks(p[i])
        true_ranks = ranks[yt[i] == 1]
        terms = [(true_ranks <= rank).sum() / rank for rank in true_ranks]
        scores.append(np.mean(terms))
    return float(np.mean(scores))


def percent_improvement(p0: float, p1: float) -> float:
    """Relative change (p1 - p0) / p0 of a measure against its baseline."""
    if p0 <= 0.0:
        raise ValueError(f"improvement is undefined for baseline {p0}")
    return (p1 - p0) / p0


def compute_measure(spec: MeasureSpec, y_true, y_pred=None, proba=None) -> float:
    """Evaluate one measure; classification measures read y_pred, ranking
    measures read proba."""
    if spec.needs_proba:
        if proba is None:
            raise ValueError(f"measure {spec.name!r} requires probabilities")
        fn = {
            "one_error": one_error,
            "coverage": coverage,
            "ranking_loss": ranking_loss,
            "average_precision": average_precision,
        }[spec.name]
        return fn(y_true, proba)
    if y_pred is None:
        raise ValueError(f"measure {spec.name!r} requires binary predictions")
    if spec.name in AVERAGED_MEASURES:
        p, r, f = prf1(y_true, y_pred, spec.averaging)
        return {"precision": p, "recall": r, "f1": f}[spec.name]
    fn = {
        "subset_accuracy": subset_accuracy,
        "accuracy": accuracy,
        "hamming_loss": hamming_loss,
    }[spec.name]
    return fn(y_true, y_pred)


def unit_interval_value(spec: MeasureSpec, value: float, num_classes: int) -> float:
    """Rescale a measure value into [0, 1]; only coverage needs it (divide by
    the class count)."""
    if spec.name == "coverage":
        return value / num_classes
    return value


DEFAULT_SPECS = (
    MeasureSpec("subset_accuracy"),
    MeasureSpec("accuracy"),
    MeasureSpec("hamming_loss"),
    MeasureSpec("precision", "weighted"),
    MeasureSpec("recall", "weighted"),
    MeasureSpec("f1", "micro"),
    MeasureSpec("f1", "macro"),
    MeasureSpec("f1", "weighted"),
    MeasureSpec("f1", "samples"),
    MeasureSpec("one_error"),
    MeasureSpec("coverage"),
    MeasureSpec("ranking_loss"),
    MeasureSpec("average_precision"),
)


def evaluate(
    y_true,
    y_pred=None,
    proba=None,
    specs: tuple[MeasureSpec, ...] = DEFAULT_SPECS,
    threshold: float = 0.5,
) -> EvaluationReport:
    """Compute a set of measures into one report.

    When y_pred is omitted it is derived from proba at `threshold`. Ranking
    measures are skipped (not failed) if proba is absent.
    """
    yt = _as_binary(y_true, "y_true")
    if y_pred is None and proba is not None:
        y_pred = (np.asarray(proba, dtype=np.float64) >= threshold).astype(np.int64)
    values: dict = {}
    zero_divs = 0
    for spec in specs:
        if spec.needs_proba and proba is None:
            continue
        if spec.name in AVERAGED_MEASURES:
            p, r, f, z = _prf1_counted(yt, y_pred, spec.averaging)
            zero_divs += z
            values[spec.key] = {"precision": p, "recall": r, "f1": f}[spec.name]
        else:
            values[spec.key] = compute_measure(spec, yt, y_pred, proba)
    return EvaluationReport(
        n_samples=yt.shape[0],
        num_classes=yt.shape[1],
        values=values,
        zero_division_count=zero_divs,
    )
