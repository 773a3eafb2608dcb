"""One-vs-rest L2-regularized logistic regression, trained by full-batch
gradient descent with a fixed epoch count and zero initialization.

The model is deliberately cheap and bit-deterministic: the oversampling loop
retrains it once per iteration. Classes without a single positive training
instance get a degenerate always-negative model (probability 0).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

MODEL_FORMAT = "ovr-logistic"
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 0.1
    l2: float = 1e-4
    epochs: int = 300
    seed: int = 0


@dataclass(frozen=True)
class OvrLinearModel:
    """Per-class weight vectors (bias last) and per-class trained flags."""

    weights: np.ndarray  # (num_classes, dimension + 1)
    trained: np.ndarray  # (num_classes,) bool; False = degenerate always-negative
    hyperparams: Hyperparams

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dimension(self) -> int:
        return self.weights.shape[1] - 1


def _with_bias(x: np.ndarray) -> np.ndarray:
    return np.hstack([x, np.ones((x.shape[0], 1))])


def loss_and_gradient(
    w: np.ndarray, xb: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    """Mean logistic cross-entropy plus an L2 penalty on the non-bias weights,
    with its analytic gradient.

    xb already carries the bias column (last); the bias is not regularized.
    """
    n = xb.shape[0]
    z = xb @ w
    # log(1 + e^z) - y*z is the stable form of the per-instance cross-entropy
    loss = float(np.logaddexp(0.0, z).sum() - y @ z) / n
    loss += 0.5 * l2 * float(w[:-1] @ w[:-1])
    grad = xb.T @ (expit(z) - y) / n
    grad[:-1] += l2 * w[:-1]
    return loss, grad


def _canonical_row_order(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Content-determined row order, so gradient sums reduce in a fixed order
    no matter how the caller arranged the instances."""
    blob = np.ascontiguousarray(np.hstack([x, y]))
    as_bytes = blob.view(f"V{blob.shape[1] * blob.itemsize}").ravel()
    return np.argsort(as_bytes, kind="stable")


def fit_matrix(x: np.ndarray, y: np.ndarray, hp: Hyperparams | None = None) -> OvrLinearModel:
    """Train one independent binary logistic model per label column.

    Deterministic for fixed (data, hyperparameters): zero init, full batch,
    fixed epoch count, rows reduced in a content-canonical order (so permuting
    the training instances cannot change the weights). Columns without
    positives are marked untrained.
    """
    hp = hp or Hyperparams()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] == 0:
        raise ValueError(f"training matrix must be (n, d) with d >= 1, got {x.shape}")
    if y.ndim != 2 or y.shape[0] != x.shape[0]:
        raise ValueError(f"label matrix shape {y.shape} does not match {x.shape}")
    order = _canonical_row_order(x, y)
    x = x[order]
    y = y[order]
    xb = _with_bias(x)
    num_classes = y.shape[1]
    weights = np.zeros((num_classes, x.shape[1] + 1))
    trained = np.zeros(num_classes, dtype=bool)
    for c in range(num_classes):
        yc = y[:, c]
        if yc.sum() == 0:
            continue
        w = np.zeros(xb.shape[1])
        for _ in range(hp.epochs):
            _, grad = loss_and_gradient(w, xb, yc, hp.l2)
            w = w - hp.learning_rate * grad
        weights[c] = w
        trained[c] = True
    weights.setflags(write=False)
    trained.setflags(write=False)
    return OvrLinearModel(weights, trained, hp)


def train(labeled, hp: Hyperparams | None = None) -> OvrLinearModel:
    """Train on a LabeledSet (see fit_matrix for the matrix-level contract)."""
    return fit_matrix(labeled.vector_matrix(), labeled.label_matrix(), hp)


def predict_proba(model: OvrLinearModel, x: np.ndarray) -> np.ndarray:
    """Per-class sigmoid scores, independent across classes; degenerate
    classes score 0. Accepts a single vector or an (n, d) matrix."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != model.dimension:
        raise ValueError(f"vector dimension {x.shape[1]}, model expects {model.dimension}")
    proba = expit(_with_bias(x) @ model.weights.T)
    proba[:, ~model.trained] = 0.0
    return proba[0] if single else proba


def predict(model: OvrLinearModel, x: np.ndarray, decision_threshold: float = 0.5) -> np.ndarray:
    """Binary labels: 1 where the class probability reaches the threshold."""
    if not 0.0 < decision_threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {decision_threshold}")
    return (predict_proba(model, x) >= decision_threshold).astype(np.int8)


def save_model(model: OvrLinearModel, path) -> None:
    """Write the weight matrix as text: a JSON header line, then one JSON line
    of weights per class."""
    path = Path(path)
    header = {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "num_classes": model.num_classes,
        "dimension": model.dimension,
        "hyperparams": {
            "learning_rate": model.hyperparams.learning_rate,
            "l2": model.hyperparams.l2,
            "epochs": model.hyperparams.epochs,
            "seed": model.hyperparams.seed,
        },
    }
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for c in range(model.num_classes):
            fh.write(
                json.dumps(
                    {"trained": bool(model.trained[c]), "weights": [float(v) for v in model.weights[c]]}
                )
                + "\n"
            )


def load_model(path) -> OvrLinearModel:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != MODEL_FORMAT or header.get("version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported model format")
        rows = [json.loads(line) for line in fh if line.strip()]
    if len(rows) != header["num_classes"]:
        raise ValueError(f"{path}: expected {header['num_classes']} weight rows")
    weights = np.array([r["weights"] for r in rows], dtype=np.float64)
    trained = np.array([r["trained"] for r in rows], dtype=bool)
    if weights.shape[1] != header["dimension"] + 1:
        raise ValueError(f"{path}: weight rows do not match the declared dimension")
    hp = Hyperparams(**header["hyperparams"])
    weights.setflags(write=False)
    trained.setflags(write=False)
    return OvrLinearModel(weights, trained, hp)
