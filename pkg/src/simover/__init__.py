"""Similarity-based oversampling for imbalanced multi-label datasets.

Mines an unlabeled pool for instances similar to underrepresented classes,
pseudo-labels them against adaptive per-class thresholds, and admits each
batch only when a retrained classifier strictly improves the chosen measure.
"""

from .classifier import Hyperparams, OvrLinearModel, predict, predict_proba, train
from .data import (
    DataFormatError,
    Dataset,
    DatasetStats,
    EmbeddedInstance,
    LabeledSet,
    UnlabeledPool,
    dataset_stats,
    kfold_split,
    load_dataset,
    save_dataset,
    split_labeled_unlabeled,
)
from .harness import ExperimentPlan, ExperimentResult, emit_learning_curve, grid_search, run_fold
from .metrics import EvaluationReport, MeasureSpec, evaluate, percent_improvement
from .oversampler import (
    MetricHistoryRecord,
    OversampleConfig,
    OversampleOutcome,
    oversample,
)
from .similarity import (
    ClassSimilarityProfile,
    ProfileSet,
    class_similarity,
    initial_factor,
    instance_class_similarity,
    pair_similarity,
    update_factor,
)

__version__ = "0.1.0"

__all__ = [
    "ClassSimilarityProfile",
    "DataFormatError",
    "Dataset",
    "DatasetStats",
    "EmbeddedInstance",
    "EvaluationReport",
    "ExperimentPlan",
    "ExperimentResult",
    "Hyperparams",
    "LabeledSet",
    "MeasureSpec",
    "MetricHistoryRecord",
    "OversampleConfig",
    "OversampleOutcome",
    "OvrLinearModel",
    "ProfileSet",
    "UnlabeledPool",
    "class_similarity",
    "dataset_stats",
    "emit_learning_curve",
    "evaluate",
    "grid_search",
    "initial_factor",
    "instance_class_similarity",
    "kfold_split",
    "load_dataset",
    "oversample",
    "pair_similarity",
    "percent_improvement",
    "predict",
    "predict_proba",
    "run_fold",
    "save_dataset",
    "split_labeled_unlabeled",
    "train",
    "update_factor",
]
