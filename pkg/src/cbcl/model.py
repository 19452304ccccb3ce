"""Centroid model types, the incremental clustering rule, and CMF persistence.

Each class is summarized by a set of centroids learned online: a sample merges
into its nearest same-class centroid by weighted mean when closer than the
distance threshold, otherwise it seeds a new centroid. Classes never share
state, so learning one class cannot disturb another.

CMF, the model container, is little-endian fixed-width:

    magic "CMF1" | dim: u32 | num_classes: u32 |
    per class: [class_id: u32 | train_count: u64 | num_centroids: u32 |
                per centroid: [weight: u64 | dim x f32]]

Centroid arithmetic runs in float64 (repeated averaging in float32 drifts);
CMF stores vectors as float32, so persisted values are f32-rounded.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .errors import DataError, FormatError, ShapeError, ValidationError

CMF_MAGIC = b"CMF1"
_CMF_HEADER = struct.Struct("<4sII")
_CMF_CLASS = struct.Struct("<IQI")
_CMF_WEIGHT = struct.Struct("<Q")


@dataclass(eq=False)
class Centroid:
    """A cluster center plus the number of samples it aggregates."""

    vector: np.ndarray  # float64, shape (dim,)
    weight: int

    def copy(self) -> "Centroid":
        return Centroid(self.vector.copy(), self.weight)


@dataclass
class ClassModel:
    """Centroid set and training-sample count for one class."""

    class_id: int
    centroids: list[Centroid]
    train_count: int

    def copy(self) -> "ClassModel":
        return ClassModel(self.class_id, [c.copy() for c in self.centroids], self.train_count)

    def centroid_matrix(self) -> np.ndarray:
        return np.stack([c.vector for c in self.centroids])

    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.centroids], dtype=np.int64)

    def weighted_mean(self) -> np.ndarray:
        """Mean of all samples the centroids aggregate (weight bookkeeping)."""
        w = self.weights().astype(np.float64)
        return (w[:, None] * self.centroid_matrix()).sum(axis=0) / w.sum()

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClassModel):
            return NotImplemented
        return (
            self.class_id == other.class_id
            and self.train_count == other.train_count
            and len(self.centroids) == len(other.centroids)
            and all(
                a.weight == b.weight and np.array_equal(a.vector, b.vector)
                for a, b in zip(self.centroids, other.centroids)
            )
        )


class CbclModel:
    """Per-class centroid sets plus global config (dimension, optional budget).

    Single-writer during learn/reduce; snapshots may be read concurrently.
    Equality compares the persisted content: dimension and class state.
    `budget` and the `history` of thresholds used per learn call are runtime
    bookkeeping and are not part of CMF.
    """

    def __init__(self, dim: int, budget: int | None = None):
        dim = int(dim)
        if dim < 1:
            raise ValidationError(f"dim must be positive, got {dim}")
        if budget is not None and budget < 1:
            raise ValidationError(f"budget must be positive when given, got {budget}")
        self.dim = dim
        self.budget = budget
        self.classes: dict[int, ClassModel] = {}
        self.history: list[tuple[int, float]] = []

    def copy(self) -> "CbclModel":
        dup = CbclModel(self.dim, self.budget)
        dup.classes = {cid: cm.copy() for cid, cm in self.classes.items()}
        dup.history = list(self.history)
        return dup

    def class_ids(self) -> list[int]:
        return sorted(self.classes)

    def centroid_counts(self) -> dict[int, int]:
        return {cid: len(cm.centroids) for cid, cm in self.classes.items()}

    def __eq__(self, other) -> bool:
        if not isinstance(other, CbclModel):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.class_ids() == other.class_ids()
            and all(self.classes[cid] == other.classes[cid] for cid in self.classes)
        )


@dataclass(frozen=True)
class Hyperparams:
    """Distance threshold for clustering and vote size for classification."""

    distance_threshold: float
    vote_neighbors: int

    def __post_init__(self):
        if not (self.distance_threshold > 0 and math.isfinite(self.distance_threshold)):
            raise ValidationError("distance_threshold must be a positive finite real")
        if self.vote_neighbors < 1:
            raise ValidationError("vote_neighbors must be >= 1")


def learn_class(
    model: CbclModel,
    class_id: int,
    samples,
    distance_threshold: float,
) -> CbclModel:
    """Cluster one class's samples into its centroid set, in presentation order.

    The first sample of a new class seeds a centroid. Every later sample x is
    compared to this class's centroids by Euclidean distance; when the nearest
    one (lowest index on ties) is strictly closer than `distance_threshold` it
    is updated to the weighted mean (w * c + x) / (w + 1) and its weight grows
    by one, otherwise x becomes a new centroid of weight 1. Other classes are
    left bit-identical. Mutates `model` in place and returns it.
    """
    if not (distance_threshold > 0 and math.isfinite(distance_threshold)):
        raise ValidationError("distance_threshold must be a positive finite real")
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"samples must be a (count, dim) array, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError("samples must be non-empty")
    if arr.shape[1] != model.dim:
        raise ShapeError(f"sample dim {arr.shape[1]} does not match model dim {model.dim}")
    if not np.isfinite(arr).all():
        raise DataError("samples must be finite")

    cm = model.classes.get(int(class_id))
    if cm is None:
        cm = ClassModel(int(class_id), [], 0)
        model.classes[int(class_id)] = cm

    count = len(cm.centroids)
    buf = np.empty((count + arr.shape[0], model.dim))
    for i, cent in enumerate(cm.centroids):
        buf[i] = cent.vector
    weights = [c.weight for c in cm.centroids]

    start = 0
    if count == 0:
        buf[0] = arr[0]
        weights.append(1)
        count = 1
        start = 1
    for i in range(start, arr.shape[0]):
        x = arr[i]
        diff = buf[:count] - x
        dist_sq = (diff * diff).sum(axis=1)
        nearest = int(np.argmin(dist_sq))
        if math.sqrt(dist_sq[nearest]) < distance_threshold:
            w = weights[nearest]
            buf[nearest] = (w * buf[nearest] + x) / (w + 1)
            weights[nearest] = w + 1
        else:
            buf[count] = x
            weights.append(1)
            count += 1

    cm.centroids = [Centroid(buf[i].copy(), weights[i]) for i in range(count)]
    cm.train_count += arr.shape[0]
    model.history.append((int(class_id), float(distance_threshold)))
    return model


def total_centroids(model: CbclModel) -> int:
    """Number of centroids stored across all classes."""
    return sum(len(cm.centroids) for cm in model.classes.values())


def save_model(model: CbclModel, destination) -> None:
    """Serialize class state to the CMF layout (vectors f32-rounded)."""
    if isinstance(destination, (str, Path)):
        with open(destination, "wb") as sink:
            save_model(model, sink)
        return
    sink: BinaryIO = destination
    sink.write(_CMF_HEADER.pack(CMF_MAGIC, model.dim, len(model.classes)))
    for cid in model.class_ids():
        cm = model.classes[cid]
        sink.write(_CMF_CLASS.pack(cid, cm.train_count, len(cm.centroids)))
        for cent in cm.centroids:
            sink.write(_CMF_WEIGHT.pack(cent.weight))
            sink.write(cent.vector.astype("<f4").tobytes())


def load_model(source, budget: int | None = None) -> CbclModel:
    """Parse a CMF byte stream; the optional runtime budget can be reattached."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as stream:
            return load_model(stream, budget=budget)
    stream: BinaryIO = source
    blob = stream.read()
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(blob):
            raise FormatError("truncated CMF stream")
        piece = blob[pos : pos + n]
        pos += n
        return piece

    magic, dim, num_classes = _CMF_HEADER.unpack(take(_CMF_HEADER.size))
    if magic != CMF_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {CMF_MAGIC!r}")
    if dim < 1:
        raise FormatError("CMF dim must be positive")
    model = CbclModel(int(dim), budget=budget)
    vec_bytes = 4 * dim
    for _ in range(num_classes):
        class_id, train_count, num_centroids = _CMF_CLASS.unpack(take(_CMF_CLASS.size))
        if class_id in model.classes:
            raise FormatError(f"duplicate class id {class_id} in CMF")
        if (num_centroids == 0) != (train_count == 0):
            raise ValidationError(
                f"class {class_id}: centroids must be non-empty exactly when train_count > 0"
            )
        centroids: list[Centroid] = []
        for _ in range(num_centroids):
            (weight,) = _CMF_WEIGHT.unpack(take(_CMF_WEIGHT.size))
            if weight < 1:
                raise ValidationError(f"class {class_id}: centroid weight must be >= 1")
            vec = np.frombuffer(take(vec_bytes), dtype="<f4").astype(np.float64)
            if not np.isfinite(vec).all():
                raise DataError(f"class {class_id}: centroid vector is not finite")
            centroids.append(Centroid(vec, int(weight)))
        model.classes[int(class_id)] = ClassModel(int(class_id), centroids, int(train_count))
    if pos != len(blob):
        raise FormatError(f"{len(blob) - pos} trailing bytes after CMF payload")
    return model
