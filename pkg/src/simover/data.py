"""Dataset containers, the line-delimited instance file format, and deterministic splits.

An instance file is a header line followed by one JSON object per instance:

    {"dimension": 3, "num_classes": 2, "class_names": ["a", "b"]}
    {"id": "x1", "vector": [0.1, 0.2, 0.3], "labels": [1, 0]}
    {"id": "x2", "vector": [0.4, 0.5, 0.6], "labels": null}

Labeled sets require a label vector on every record; unlabeled pools require
none of them to carry one. Floats are serialized with repr precision so files
round-trip exactly.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class DataFormatError(ValueError):
    """An instance file or record violates the format contract."""


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class EmbeddedInstance:
    """One data point: opaque id, dense embedding vector, optional binary labels."""

    id: str
    vector: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.ndim != 1 or vec.size == 0:
            raise DataFormatError(f"instance {self.id!r}: vector must be a nonempty 1-d array")
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int8)
            if lab.ndim != 1:
                raise DataFormatError(f"instance {self.id!r}: labels must be a 1-d 0/1 vector")
            if not np.isin(lab, (0, 1)).all():
                raise DataFormatError(f"instance {self.id!r}: labels must contain only 0 or 1")
            if lab.sum() == 0:
                raise DataFormatError(f"instance {self.id!r}: labeled instance has no positive label")
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered, immutable collection of instances sharing one embedding space."""

    dimension: int
    num_classes: int
    class_names: tuple[str, ...]
    instances: tuple[EmbeddedInstance, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "instances", tuple(self.instances))
        if self.dimension < 1:
            raise DataFormatError("dimension must be positive")
        if self.num_classes < 1:
            raise DataFormatError("num_classes must be positive")
        if len(self.class_names) != self.num_classes:
            raise DataFormatError(
                f"{len(self.class_names)} class names for num_classes={self.num_classes}"
            )
        seen: set[str] = set()
        for inst in self.instances:
            if inst.vector.shape[0] != self.dimension:
                raise DataFormatError(
                    f"instance {inst.id!r}: vector length {inst.vector.shape[0]}, "
                    f"expected dimension {self.dimension}"
                )
            if inst.labels is not None and inst.labels.shape[0] != self.num_classes:
                raise DataFormatError(
                    f"instance {inst.id!r}: label length {inst.labels.shape[0]}, "
                    f"expected {self.num_classes}"
                )
            if inst.id in seen:
                raise DataFormatError(f"duplicate instance id {inst.id!r}")
            seen.add(inst.id)

    def __len__(self) -> int:
        return len(self.instances)

    def ids(self) -> tuple[str, ...]:
        return tuple(inst.id for inst in self.instances)

    def vector_matrix(self) -> np.ndarray:
        """(n, dimension) float64 matrix of instance vectors."""
        if not self.instances:
            return np.empty((0, self.dimension))
        return np.stack([inst.vector for inst in self.instances])

    def with_instances(self, instances: Iterable[EmbeddedInstance]):
        return type(self)(self.dimension, self.num_classes, self.class_names, tuple(instances))

    def select(self, indices: Sequence[int]):
        return self.with_instances(self.instances[int(i)] for i in indices)


class LabeledSet(Dataset):
    """Dataset in which every instance carries a label vector."""

    def __post_init__(self):
        super().__post_init__()
        for inst in self.instances:
            if inst.labels is None:
                raise DataFormatError(f"instance {inst.id!r}: labeled set requires labels")

    def label_matrix(self) -> np.ndarray:
        """(n, num_classes) binary matrix, one column per class."""
        if not self.instances:
            return np.empty((0, self.num_classes), dtype=np.int8)
        return np.stack([inst.labels for inst in self.instances])

    def class_counts(self) -> np.ndarray:
        """Positive-instance count per class."""
        return self.label_matrix().sum(axis=0).astype(np.int64)

    def class_members(self, class_index: int) -> np.ndarray:
        """(m, dimension) matrix of the vectors positive for one class."""
        mask = self.label_matrix()[:, class_index] == 1
        return self.vector_matrix()[mask]


class UnlabeledPool(Dataset):
    """Dataset in which no instance carries a label vector."""

    def __post_init__(self):
        super().__post_init__()
        for inst in self.instances:
            if inst.labels is not None:
                raise DataFormatError(
                    f"instance {inst.id!r}: unlabeled pool must not carry labels"
                )


@dataclass(frozen=True)
class DatasetStats:
    """Summary statistics of a labeled set."""

    num_labels: int
    num_instances: int
    cardinality: float
    density: float
    max_imbalance_ratio: float

    def to_dict(self) -> dict:
        return {
            "num_labels": self.num_labels,
            "num_instances": self.num_instances,
            "cardinality": self.cardinality,
            "density": self.density,
            "max_imbalance_ratio": self.max_imbalance_ratio,
        }


_ROLES = {"labeled": LabeledSet, "unlabeled": UnlabeledPool}


def load_dataset(path, role: str) -> Dataset:
    """Load an instance file, validating each record against the `role` contract.

    role is "labeled" or "unlabeled". Raises DataFormatError with the offending
    line number on malformed records, dimension mismatches, duplicate ids, or a
    labeled-role record without labels.
    """
    if role not in _ROLES:
        raise ValueError(f"role must be 'labeled' or 'unlabeled', got {role!r}")
    cls = _ROLES[role]
    path = Path(path)
    instances: list[EmbeddedInstance] = []
    header = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if header is None:
                header = _parse_header(record, path, lineno)
                continue
            instances.append(_parse_record(record, header, role, path, lineno))
    if header is None:
        raise DataFormatError(f"{path}: empty dataset")
    dimension, num_classes, class_names = header
    try:
        return cls(dimension, num_classes, class_names, tuple(instances))
    except DataFormatError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def _parse_header(record: dict, path, lineno: int) -> tuple[int, int, tuple[str, ...]]:
    for key in ("dimension", "num_classes", "class_names"):
        if key not in record:
            raise DataFormatError(f"{path}:{lineno}: header missing {key!r}")
    dimension = record["dimension"]
    num_classes = record["num_classes"]
    class_names = record["class_names"]
    if not isinstance(dimension, int) or dimension < 1:
        raise DataFormatError(f"{path}:{lineno}: dimension must be a positive integer")
    if not isinstance(num_classes, int) or num_classes < 1:
        raise DataFormatError(f"{path}:{lineno}: num_classes must be a positive integer")
    if not isinstance(class_names, list) or len(class_names) != num_classes:
        raise DataFormatError(f"{path}:{lineno}: class_names must list num_classes names")
    return dimension, num_classes, tuple(str(c) for c in class_names)


def _parse_record(record: dict, header, role: str, path, lineno: int) -> EmbeddedInstance:
    dimension, num_classes, _ = header
    for key in ("id", "vector"):
        if key not in record:
            raise DataFormatError(f"{path}:{lineno}: record missing {key!r}")
    rid = record["id"]
    vector = record["vector"]
    labels = record.get("labels")
    if not isinstance(rid, str) or not rid:
        raise DataFormatError(f"{path}:{lineno}: id must be a nonempty string")
    if not isinstance(vector, list):
        raise DataFormatError(f"{path}:{lineno}: vector must be a list (id {rid!r})")
    if len(vector) != dimension:
        raise DataFormatError(
            f"{path}:{lineno}: vector length {len(vector)}, expected dimension "
            f"{dimension} (id {rid!r})"
        )
    if role == "labeled":
        if labels is None:
            raise DataFormatError(f"{path}:{lineno}: labeled record missing labels (id {rid!r})")
        if not isinstance(labels, list) or len(labels) != num_classes:
            raise DataFormatError(
                f"{path}:{lineno}: labels must list {num_classes} entries (id {rid!r})"
            )
    else:
        if labels is not None:
            raise DataFormatError(
                f"{path}:{lineno}: unlabeled record must have labels null (id {rid!r})"
            )
    try:
        return EmbeddedInstance(rid, np.asarray(vector, dtype=np.float64), labels)
    except DataFormatError as exc:
        raise DataFormatError(f"{path}:{lineno}: {exc}") from exc


def save_dataset(dataset: Dataset, path, extra_header: dict | None = None) -> None:
    """Write a dataset in the instance file format (repr-precision floats)."""
    path = Path(path)
    header = {
        "dimension": dataset.dimension,
        "num_classes": dataset.num_classes,
        "class_names": list(dataset.class_names),
    }
    if extra_header:
        header.update(extra_header)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for inst in dataset.instances:
            record = {
                "id": inst.id,
                "vector": [float(x) for x in inst.vector],
                "labels": None if inst.labels is None else [int(b) for b in inst.labels],
            }
            fh.write(json.dumps(record) + "\n")


def stratified_partition(
    d: LabeledSet, fraction: float, seed
) -> tuple[LabeledSet, LabeledSet]:
    """Split a labeled set into (A, B) with |A| = round(fraction * n), keeping
    each class's positive count on side A within +-1 of fraction * class count
    where feasible.

    Classes are processed in descending frequency order (ties broken by a seeded
    shuffle); within a class, instances are drawn in seeded-shuffled order.
    Deterministic for a fixed seed.
    """
    n = len(d)
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    n_a = int(round(fraction * n))
    if n_a < 1 or n_a >= n:
        raise ValueError(
            f"fraction {fraction} produces an empty side ({n_a} of {n} instances)"
        )
    rng = _as_rng(seed)
    labels = d.label_matrix()
    counts = labels.sum(axis=0)

    order = np.arange(d.num_classes)
    # descending frequency; seeded shuffle breaks ties without disturbing the order
    tie_break = rng.permutation(d.num_classes)
    order = order[np.lexsort((tie_break[order], -counts[order]))]

    chosen: set[int] = set()
    for c in order:
        target = int(round(fraction * counts[c]))
        positives = np.flatnonzero(labels[:, c] == 1)
        have = sum(1 for i in positives if i in chosen)
        need = target - have
        if need <= 0:
            continue
        available = np.array([i for i in positives if i not in chosen], dtype=np.int64)
        rng.shuffle(available)
        for i in available[:need]:
            if len(chosen) >= n_a:
                break
            chosen.add(int(i))
        if len(chosen) >= n_a:
            break

    if len(chosen) < n_a:
        remaining = np.array([i for i in range(n) if i not in chosen], dtype=np.int64)
        rng.shuffle(remaining)
        for i in remaining[: n_a - len(chosen)]:
            chosen.add(int(i))

    a_idx = sorted(chosen)
    b_idx = [i for i in range(n) if i not in chosen]
    side_a = d.select(a_idx)
    for c in range(d.num_classes):
        if counts[c] > 0 and side_a.label_matrix()[:, c].sum() == 0:
            logger.warning(
                "class %r has zero positives on the %.3f side of the split",
                d.class_names[c],
                fraction,
            )
    return side_a, d.select(b_idx)


def strip_labels(d: LabeledSet) -> UnlabeledPool:
    """Drop every label vector, turning a labeled set into a pool."""
    return UnlabeledPool(
        d.dimension,
        d.num_classes,
        d.class_names,
        tuple(EmbeddedInstance(i.id, i.vector, None) for i in d.instances),
    )


def split_labeled_unlabeled(
    d: LabeledSet, labeled_fraction: float, seed
) -> tuple[LabeledSet, UnlabeledPool]:
    """Stratified split into a labeled set and a label-stripped pool.

    The pool side's true labels are not returned; callers that need them for
    audits should keep the input set and look them up by instance id.
    """
    labeled, rest = stratified_partition(d, labeled_fraction, seed)
    return labeled, strip_labels(rest)


def kfold_split(d: Dataset, k: int, seed) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded k-fold partition: k (train_indices, test_indices) pairs.

    Test folds are disjoint, cover every index, and differ in size by at most
    one (earlier folds take the remainder).
    """
    n = len(d)
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds dataset size {n}")
    rng = _as_rng(seed)
    perm = rng.permutation(n)
    folds = np.array_split(perm, k)
    out = []
    for fold in folds:
        test = np.sort(fold)
        train = np.setdiff1d(perm, fold)
        out.append((train, test))
    return out


def dataset_stats(d: LabeledSet) -> DatasetStats:
    """Label cardinality, density, and the max:min class-count imbalance ratio."""
    if len(d) == 0:
        raise ValueError("dataset_stats requires a nonempty dataset")
    labels = d.label_matrix()
    counts = labels.sum(axis=0)
    cardinality = float(labels.sum()) / len(d)
    present = counts[counts > 0]
    mir = float(present.max()) / float(present.min())
    return DatasetStats(
        num_labels=d.num_classes,
        num_instances=len(d),
        cardinality=cardinality,
        density=cardinality / d.num_classes,
        max_imbalance_ratio=mir,
    )
