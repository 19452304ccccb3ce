"""Centroid-based concept learning over embedding vectors.

A class-incremental classifier that summarizes every class as a set of
weighted centroids built online, predicts by distance-weighted voting over
the nearest centroids, and stays inside a fixed memory budget by clustering
each class's centroids down when the total would overflow. Includes dataset
tooling (CEF binary format, synthetic data, increment planning), a
cross-validating hyperparameter tuner, and an experiment harness for
incremental and few-shot-incremental protocols.
"""

from .classifier import (
    IncrementReport,
    Prediction,
    confusion_csv,
    evaluate,
    predict,
    predict_ncm,
    report_text,
)
from .dataset import (
    EmbeddingDataset,
    EmbeddingRecord,
    IncrementPlan,
    IncrementSplits,
    make_synthetic,
    plan_increments,
    read_cef,
    read_csv,
    write_cef,
)
from .errors import (
    CbclError,
    ConfigError,
    DataError,
    FormatError,
    MetricError,
    PlanError,
    ShapeError,
    StateError,
    ValidationError,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    IncrementRecord,
    OmegaMetrics,
    RunResult,
    omega_metrics,
    parse_config_file,
    run_experiment,
    summary_text,
    write_increment_csv,
    write_summary,
)
from .model import (
    CbclModel,
    Centroid,
    ClassModel,
    Hyperparams,
    learn_class,
    load_model,
    save_model,
    total_centroids,
)
from .reduction import KMeansResult, ReductionPlan, apply_reduction, kmeans, plan_reduction
from .tuning import tune

__version__ = "0.1.0"

__all__ = [
    "CbclError", "CbclModel", "Centroid", "ClassModel", "ConfigError",
    "DataError", "EmbeddingDataset", "EmbeddingRecord", "ExperimentConfig",
    "ExperimentResult", "FormatError", "Hyperparams", "IncrementPlan",
    "IncrementRecord", "IncrementReport", "IncrementSplits", "KMeansResult",
    "MetricError", "OmegaMetrics", "PlanError", "Prediction", "ReductionPlan",
    "RunResult", "ShapeError", "StateError", "ValidationError",
    "apply_reduction", "confusion_csv", "evaluate", "kmeans", "learn_class",
    "load_model", "make_synthetic", "omega_metrics", "parse_config_file",
    "plan_increments", "plan_reduction", "predict", "predict_ncm", "read_cef",
    "read_csv", "report_text", "run_experiment", "save_model", "summary_text",
    "total_centroids", "tune", "write_cef", "write_increment_csv",
    "write_summary",
]
