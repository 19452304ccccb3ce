"""Label prediction by distance-weighted voting over the nearest centroids.

The vote gathers the n globally closest centroids to a query (exact brute
force over all classes; centroid counts stay small enough that approximate
indices would be pointless). Each of the n centroids adds 1/distance to its
class's raw score, and every class score is then divided by that class's
training-sample count so classes with more data (hence more centroids) do not
dominate. Distances are clamped below at 1e-12 before inversion so a query
that coincides with a stored centroid keeps a finite score.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import EmbeddingDataset
from .errors import ConfigError, DataError, ShapeError, StateError, ValidationError
from .model import CbclModel

EPSILON_DISTANCE = 1e-12

PREDICTION_MODES = ("voting", "ncm", "single-centroid")

_EVAL_CHUNK = 256


@dataclass(frozen=True)
class Prediction:
    """Predicted label plus the imbalance-corrected score of every known class."""

    label: int
    scores: dict[int, float]


def _centroid_table(model: CbclModel) -> tuple[np.ndarray, np.ndarray, dict[int, int]]:
    """Stack all centroids: (matrix, class id per row, class id -> train count)."""
    if not model.classes:
        raise StateError("model has no classes")
    rows: list[np.ndarray] = []
    row_class: list[int] = []
    train_counts: dict[int, int] = {}
    for cid in model.class_ids():
        cm = model.classes[cid]
        train_counts[cid] = cm.train_count
        for cent in cm.centroids:
            rows.append(cent.vector)
            row_class.append(cid)
    if not rows:
        raise StateError("model has no centroids")
    return np.stack(rows), np.asarray(row_class, dtype=np.int64), train_counts


def _class_means(model: CbclModel) -> tuple[np.ndarray, list[int]]:
    ids = [cid for cid in model.class_ids() if model.classes[cid].centroids]
    if not ids:
        raise StateError("model has no centroids")
    means = np.stack([model.classes[cid].weighted_mean() for cid in ids])
    return means, ids

def _check_query(model: CbclModel, x) -> np.ndarray:
    q = np.asarray(x, dtype=np.float64).reshape(-1)
    if q.shape[0] != model.dim:
        raise ShapeError(f"query dim {q.shape[0]} does not match model dim {model.dim}")
    if not np.isfinite(q).all():
        raise DataError("query vector must be finite")
    return q


def _vote_scores(
    distances: np.ndarray,
    row_class: np.ndarray,
    train_counts: dict[int, int],
    n: int,
) -> dict[int, float]:
    """Score one query row; shared by predict and the batched evaluator."""
    k = min(n, len(distances))
    order = np.argsort(distances, kind="stable")[:k]
    scores = {cid: 0.0 for cid in train_counts}
    for j in order:
        d = max(float(distances[j]), EPSILON_DISTANCE)
        scores[int(row_class[j])] += 1.0 / d
    for cid in scores:
        if scores[cid]:
            scores[cid] /= train_counts[cid]
    return scores


def _argmax_label(scores: dict[int, float]) -> int:
    best = max(scores.values())
    return min(cid for cid, s in scores.items() if s == best)


def predict(model: CbclModel, x, n: int) -> Prediction:
    """Distance-weighted vote of the n nearest centroids across all classes.

    Uses all centroids when the model holds fewer than n. Ties on the final
    score resolve to the lowest class id.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    q = _check_query(model, x)
    matrix, row_class, train_counts = _centroid_table(model)
    distances = cdist(q[None, :], matrix)[0]
    scores = _vote_scores(distances, row_class, train_counts, n)
    return Prediction(_argmax_label(scores), scores)


def predict_ncm(model: CbclModel, x) -> Prediction:
    """Nearest-class-mean ablation: one weighted-mean vector per class.

    For a model built by learning alone the weighted mean of a class's
    centroids equals the mean of all its training samples. Scores are inverse
    distances to the class means, so argmax is the nearest mean.
    """
    q = _check_query(model, x)
    means, ids = _class_means(model)
    distances = cdist(q[None, :], means)[0]
    scores = {
        cid: 1.0 / max(float(d), EPSILON_DISTANCE) for cid, d in zip(ids, distances)
    }
    return Prediction(_argmax_label(scores), scores)


@dataclass(frozen=True, eq=False)
class IncrementReport:
    """Evaluation metrics over the classes a model has seen.

    The confusion matrix is indexed by `class_ids` on both axes; rows are
    ground truth, so each row sums to that class's test-sample count.
    """

    class_ids: tuple[int, ...]
    confusion: np.ndarray
    accuracy: float
    per_class_accuracy: dict[int, float]
    n_test: int

    def accuracy_over(self, classes) -> float:
        """Top-1 accuracy restricted to a subset of the ground-truth classes."""
        wanted = set(classes)
        rows = [i for i, cid in enumerate(self.class_ids) if cid in wanted]
        missing = wanted - set(self.class_ids)
        if missing:
            raise ValidationError(f"classes {sorted(missing)} not covered by this report")
        total = int(self.confusion[rows].sum())
        if total == 0:
            return float("nan")
        correct = int(self.confusion[rows, rows].sum())
        return correct / total


def evaluate(
    model: CbclModel,
    test: EmbeddingDataset,
    n: int = 1,
    mode: str = "voting",
) -> IncrementReport:
    """Top-1 accuracy, per-class accuracy and confusion matrix on a test set.

    `mode` selects the classifier: "voting" (n nearest centroids),
    "single-centroid" (voting with n=1) or "ncm" (nearest class mean).
    """
    if mode not in PREDICTION_MODES:
        raise ConfigError(f"mode must be one of {PREDICTION_MODES}, got {mode!r}")
    if test.dim != model.dim:
        raise ShapeError(f"test dim {test.dim} does not match model dim {model.dim}")
    model_classes = set(model.class_ids())
    unseen = set(test.classes) - model_classes
    if unseen:
        raise ConfigError(f"test set contains classes the model has not seen: {sorted(unseen)}")

    class_ids = tuple(model.class_ids())
    index_of = {cid: i for i, cid in enumerate(class_ids)}
    confusion = np.zeros((len(class_ids), len(class_ids)), dtype=np.int64)

    if mode == "ncm":
        matrix, ids = _class_means(model)
        row_class = np.asarray(ids, dtype=np.int64)
        train_counts = None
        votes = 1
    else:
        matrix, row_class, train_counts = _centroid_table(model)
        votes = 1 if mode == "single-centroid" else n
        if votes < 1:
            raise ValueError("n must be >= 1")

    queries = test.vectors.astype(np.float64)
    for lo in range(0, len(test), _EVAL_CHUNK):
        chunk = queries[lo : lo + _EVAL_CHUNK]
        distances = cdist(chunk, matrix)
        for r in range(len(chunk)):
            if mode == "ncm":
                nearest = int(np.argmin(distances[r]))
                pred = int(row_class[nearest])
            else:
                scores = _vote_scores(distances[r], row_class, train_counts, votes)
                pred = _argmax_label(scores)
            true = int(test.labels[lo + r])
            confusion[index_of[true], index_of[pred]] += 1

    total = int(confusion.sum())
    correct = int(np.trace(confusion))
    per_class: dict[int, float] = {}
    for cid, i in index_of.items():
        row_total = int(confusion[i].sum())
        if row_total:
            per_class[cid] = confusion[i, i] / row_total
    return IncrementReport(
        class_ids=class_ids,
        confusion=confusion,
        accuracy=correct / total if total else float("nan"),
        per_class_accuracy=per_class,
        n_test=total,
    )


def report_text(report: IncrementReport) -> str:
    """Line-oriented `metric<TAB>value` rendering of a report."""
    lines = [
        f"n_test\t{report.n_test}",
        f"top1_accuracy\t{report.accuracy:.6f}",
    ]
    for cid in report.class_ids:
        if cid in report.per_class_accuracy:
            lines.append(f"class_accuracy.{cid}\t{report.per_class_accuracy[cid]:.6f}")
    return "\n".join(lines) + "\n"


def confusion_csv(report: IncrementReport) -> str:
    """CSV confusion matrix: one header row/column of class ids, rows are truth."""
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["true\\pred"] + [str(cid) for cid in report.class_ids])
    for i, cid in enumerate(report.class_ids):
        writer.writerow([str(cid)] + [str(int(v)) for v in report.confusion[i]])
    return out.getvalue()
