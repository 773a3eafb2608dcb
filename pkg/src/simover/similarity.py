"""Pairwise similarity functions, per-class similarity summaries, and the
adaptive acceptance-threshold factors.

All similarity kinds map a vector pair into [EPSILON, 1]:

  cosine          raw cosine, floored at EPSILON
  euclidean       1 / (1 + L2 distance)
  jensen_shannon  1 - base-2 Jensen-Shannon distance of the vectors after
                  shifting each by its own minimum and L1-normalizing

A class's base similarity s is reduced from all unordered member-pair scores,
either by the mean ("average") or the 75th percentile ("safe_interval").
The acceptance threshold for a class is s * f, where the factor f starts at
(1/s)^0.5 and adapts after every accept/reject decision.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import LabeledSet

logger = logging.getLogger(__name__)

EPSILON = 1e-6

SIMILARITY_KINDS = ("cosine", "euclidean", "jensen_shannon")
CALC_TYPES = ("average", "safe_interval")


def _check_kind(kind: str) -> None:
    if kind not in SIMILARITY_KINDS:
        raise ValueError(f"unknown similarity kind {kind!r}")


def _js_distribution(v: np.ndarray) -> np.ndarray:
    """Shift by the minimum component and L1-normalize; constant vectors map
    to the uniform distribution."""
    shifted = v - v.min()
    total = shifted.sum()
    if total == 0.0:
        return np.full(v.shape, 1.0 / v.shape[-1])
    return shifted / total


def _js_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Base-2 Jensen-Shannon distance between two distributions, in [0, 1]."""
    m = 0.5 * (p + q)

    def entropy(dist: np.ndarray) -> float:
        nz = dist[dist > 0]
        return float(-(nz * np.log2(nz)).sum())

    divergence = entropy(m) - 0.5 * (entropy(p) + entropy(q))
    return float(np.sqrt(max(divergence, 0.0)))


def pair_similarity(u: np.ndarray, v: np.ndarray, kind: str) -> float:
    """Similarity of a vector pair in [EPSILON, 1]; symmetric; 1.0 for u == v."""
    _check_kind(kind)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    if kind == "cosine":
        nu = float(np.linalg.norm(u))
        nv = float(np.linalg.norm(v))
        if nu == 0.0 or nv == 0.0:
            raise ValueError("cosine similarity is undefined for a zero vector")
        if np.array_equal(u, v):
            return 1.0
        score = float(u @ v) / (nu * nv)
    elif kind == "euclidean":
        score = 1.0 / (1.0 + float(np.linalg.norm(u - v)))
    else:
        if np.array_equal(u, v):
            return 1.0
        score = 1.0 - _js_distance(_js_distribution(u), _js_distribution(v))
    return float(min(max(score, EPSILON), 1.0))


def similarity_to_members(x: np.ndarray, members: np.ndarray, kind: str) -> float:
    """Mean pair similarity between one vector and every row of a member matrix.

    The per-member scores are summed in sorted-value order, so the result does
    not depend on the member row order.
    """
    _check_kind(kind)
    x = np.asarray(x, dtype=np.float64)
    members = np.atleast_2d(np.asarray(members, dtype=np.float64))
    if members.shape[0] == 0:
        raise ValueError("similarity against an empty member set")
    if members.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {members.shape[1]}")
    identical = (members == x).all(axis=1)
    if kind == "cosine":
        nx = float(np.linalg.norm(x))
        norms = np.linalg.norm(members, axis=1)
        if nx == 0.0 or (norms == 0.0).any():
            raise ValueError("cosine similarity is undefined for a zero vector")
        sims = (members @ x) / (norms * nx)
    elif kind == "euclidean":
        dists = np.linalg.norm(members - x, axis=1)
        sims = 1.0 / (1.0 + dists)
    else:
        p = _js_distribution(x)
        shifted = members - members.min(axis=1, keepdims=True)
        totals = shifted.sum(axis=1, keepdims=True)
        q = shifted / np.where(totals == 0.0, 1.0, totals)
        q[totals[:, 0] == 0.0] = 1.0 / members.shape[1]
        m = 0.5 * (p + q)

        def entropy_rows(dist: np.ndarray) -> np.ndarray:
            safe = np.where(dist > 0, dist, 1.0)
            return -(dist * np.log2(safe)).sum(axis=1)

        divergence = entropy_rows(m) - 0.5 * (
            entropy_rows(q) + entropy_rows(np.broadcast_to(p, q.shape))
        )
        sims = 1.0 - np.sqrt(np.maximum(divergence, 0.0))
    sims = np.where(identical, 1.0, np.clip(sims, EPSILON, 1.0))
    return float(np.sort(sims).mean())


def instance_class_similarity(
    x: np.ndarray, labeled: LabeledSet, class_index: int, kind: str
) -> float:
    """Mean similarity between a vector and the labeled members of one class."""
    members = labeled.class_members(class_index)
    if members.shape[0] == 0:
        raise ValueError(
            f"class {labeled.class_names[class_index]!r} has no labeled members"
        )
    return similarity_to_members(x, members, kind)


def class_similarity(
    labeled: LabeledSet,
    class_index: int,
    kind: str,
    calc: str,
    default: float | None = None,
) -> float:
    """Reduce all unordered member-pair similarities of one class to a scalar.

    calc="average" takes the mean; calc="safe_interval" the 75th percentile
    (linear interpolation). A class with fewer than two positive members has no
    pairs: `default` is returned with a warning when given, otherwise this is
    an error.
    """
    if calc not in CALC_TYPES:
        raise ValueError(f"unknown similarity calc type {calc!r}")
    members = labeled.class_members(class_index)
    if members.shape[0] < 2:
        if default is None:
            raise ValueError(
                f"class {labeled.class_names[class_index]!r} has fewer than two "
                "positive members and no default was given"
            )
        logger.warning(
            "class %r has %d positive member(s); using default similarity %.6f",
            labeled.class_names[class_index],
            members.shape[0],
            default,
        )
        return default
    scores = [
        pair_similarity(members[a], members[b], kind)
        for a in range(members.shape[0])
        for b in range(a + 1, members.shape[0])
    ]
    if calc == "average":
        value = float(np.mean(scores))
    else:
        value = float(np.percentile(scores, 75))
    return float(min(max(value, EPSILON), 1.0))


def all_class_similarities(labeled: LabeledSet, kind: str, calc: str) -> np.ndarray:
    """Base similarity per class; classes with fewer than two positive members
    receive the mean of the computable ones (0.5 if none is computable)."""
    values = np.full(labeled.num_classes, np.nan)
    for c in range(labeled.num_classes):
        members = labeled.class_members(c)
        if members.shape[0] >= 2:
            values[c] = class_similarity(labeled, c, kind, calc)
    computable = values[~np.isnan(values)]
    if computable.size == 0:
        logger.warning("no class has two positive members; using 0.5 for every class")
        fallback = 0.5
    else:
        fallback = float(computable.mean())
    for c in range(labeled.num_classes):
        if np.isnan(values[c]):
            values[c] = class_similarity(labeled, c, kind, calc, default=fallback)
    return values


def factor_cap(s: float) -> float:
    """Largest admissible factor for a class: keeps the update rule contractive
    (f < 2) and the threshold s * f at most 1."""
    return min(2.0, 1.0 / s)


def initial_factor(s: float) -> float:
    """Starting factor (1/s)^0.5, clamped into [1, factor_cap(s)]."""
    if not 0.0 < s <= 1.0:
        raise ValueError(f"base similarity must lie in (0, 1], got {s}")
    return float(min(max((1.0 / s) ** 0.5, 1.0), factor_cap(s)))


def update_factor(f: float, accepted: bool, s: float) -> float:
    """Tighten the factor after an accepted batch, loosen it after a rejection.

    accepted: f * (1 + (1-f)^4); rejected: f * (1 - (1-f)^4). The result is
    clamped into [1, factor_cap(s)]; f = 1 is a fixed point of both branches.
    """
    if f < 1.0:
        raise ValueError(f"factor must be at least 1, got {f}")
    step = (1.0 - f) ** 4
    updated = f * (1.0 + step) if accepted else f * (1.0 - step)
    return float(min(max(updated, 1.0), factor_cap(s)))


@dataclass
class ClassSimilarityProfile:
    """Per-class base similarity, adaptive factor, and acceptance threshold."""

    class_index: int
    base_similarity: float
    factor: float

    @property
    def threshold(self) -> float:
        return self.base_similarity * self.factor

    def update(self, accepted: bool) -> None:
        self.factor = update_factor(self.factor, accepted, self.base_similarity)


@dataclass
class ProfileSet:
    """The per-class profiles together with the similarity kind they use."""

    kind: str
    profiles: list[ClassSimilarityProfile]

    def __getitem__(self, class_index: int) -> ClassSimilarityProfile:
        return self.profiles[class_index]

    def __len__(self) -> int:
        return len(self.profiles)

    def factors(self) -> tuple[float, ...]:
        return tuple(p.factor for p in self.profiles)


def build_profiles(labeled: LabeledSet, kind: str, calc: str) -> ProfileSet:
    """Class similarity profiles with freshly initialized factors."""
    similarities = all_class_similarities(labeled, kind, calc)
    return ProfileSet(
        kind,
        [
            ClassSimilarityProfile(c, float(s), initial_factor(float(s)))
            for c, s in enumerate(similarities)
        ],
    )
