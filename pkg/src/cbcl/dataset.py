"""Embedding datasets: CEF binary storage, CSV import, synthetic data, increment planning.

The on-disk container is CEF, a little-endian fixed-width layout:

    magic "CEF1" (4 bytes) | dim: u32 | count: u64 | count x [label: u32 | dim x f32]

Vectors are stored and held in memory as float32, so a write/read cycle is a
bit-exact identity.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, TextIO

import numpy as np

from .errors import ConfigError, DataError, FormatError, ValidationError

CEF_MAGIC = b"CEF1"
_CEF_HEADER = struct.Struct("<4sIQ")

# Mean placement in make_synthetic: uniform draws in a hypercube of side
# 10 * separation, rejected until pairwise distances reach `separation`.
_MEAN_BOX_FACTOR = 10.0
_MEAN_MAX_TRIES = 10_000


@dataclass(frozen=True, eq=False)
class EmbeddingRecord:
    """One labeled embedding vector."""

    label: int
    vector: np.ndarray


class EmbeddingDataset:
    """Ordered collection of labeled float32 embedding vectors.

    Backed by a (count, dim) float32 array plus an int64 label array; both are
    frozen after construction so datasets can be shared freely.
    """

    def __init__(self, dim: int, labels, vectors):
        dim = int(dim)
        if dim < 1:
            raise ValidationError(f"dim must be positive, got {dim}")
        labels = np.asarray(labels, dtype=np.int64).copy()
        vectors = np.asarray(vectors, dtype=np.float32).reshape(-1, dim).copy()
        if labels.ndim != 1 or len(labels) != len(vectors):
            raise ValidationError("labels and vectors must have matching length")
        if len(labels) and (labels.min() < 0 or labels.max() >= 2**32):
            raise ValidationError("labels must be unsigned 32-bit class ids")
        if not np.isfinite(vectors).all():
            raise DataError("vectors must be finite (no NaN/Inf)")
        labels.setflags(write=False)
        vectors.setflags(write=False)
        self.dim = dim
        self.labels = labels
        self.vectors = vectors
        self._class_index: dict[int, np.ndarray] | None = None

    @classmethod
    def from_records(cls, dim: int, records: Iterable[EmbeddingRecord | tuple]) -> "EmbeddingDataset":
        labels: list[int] = []
        rows: list[np.ndarray] = []
        for rec in records:
            label, vector = (rec.label, rec.vector) if isinstance(rec, EmbeddingRecord) else rec
            vec = np.asarray(vector, dtype=np.float32).reshape(-1)
            if vec.shape[0] != dim:
                raise ValidationError(
                    f"record for class {label} has length {vec.shape[0]}, expected dim={dim}"
                )
            labels.append(int(label))
            rows.append(vec)
        vectors = np.vstack(rows) if rows else np.empty((0, dim), dtype=np.float32)
        return cls(dim, labels, vectors)

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingDataset):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.vectors, other.vectors)
        )

    def record(self, i: int) -> EmbeddingRecord:
        return EmbeddingRecord(int(self.labels[i]), self.vectors[i])

    @property
    def class_index(self) -> dict[int, np.ndarray]:
        """Map class id -> ascending record indices; covers exactly the labels present."""
        if self._class_index is None:
            index: dict[int, np.ndarray] = {}
            for label in np.unique(self.labels):
                index[int(label)] = np.flatnonzero(self.labels == label)
            self._class_index = index
        return self._class_index

    @property
    def classes(self) -> list[int]:
        return sorted(self.class_index)

    def subset(self, indices) -> "EmbeddingDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return EmbeddingDataset(self.dim, self.labels[indices], self.vectors[indices])


def write_cef(dataset: EmbeddingDataset, destination) -> None:
    """Serialize a dataset to the CEF layout. Write-then-read is an identity."""
    if isinstance(destination, (str, Path)):
        with open(destination, "wb") as sink:
            write_cef(dataset, sink)
        return
    sink: BinaryIO = destination
    sink.write(_CEF_HEADER.pack(CEF_MAGIC, dataset.dim, len(dataset)))
    if len(dataset):
        record_dtype = np.dtype([("label", "<u4"), ("vec", "<f4", (dataset.dim,))])
        out = np.empty(len(dataset), dtype=record_dtype)
        out["label"] = dataset.labels.astype(np.uint32)
        out["vec"] = dataset.vectors
        sink.write(out.tobytes())


def read_cef(source) -> EmbeddingDataset:
    """Parse a CEF byte stream, rejecting malformed or non-finite input."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as stream:
            return read_cef(stream)
    stream: BinaryIO = source
    header = stream.read(_CEF_HEADER.size)
    if len(header) < _CEF_HEADER.size:
        raise FormatError("truncated CEF header")
    magic, dim, count = _CEF_HEADER.unpack(header)
    if magic != CEF_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {CEF_MAGIC!r}")
    if dim < 1:
        raise FormatError("CEF dim must be positive")
    record_dtype = np.dtype([("label", "<u4"), ("vec", "<f4", (dim,))])
    payload = stream.read()
    expected = count * record_dtype.itemsize
    if len(payload) < expected:
        raise FormatError(
            f"truncated CEF payload: header declares {count} records "
            f"({expected} bytes), body holds {len(payload)}"
        )
    if len(payload) > expected:
        raise FormatError(f"{len(payload) - expected} trailing bytes after CEF payload")
    raw = np.frombuffer(payload, dtype=record_dtype, count=count)
    labels = raw["label"].astype(np.int64)
    vectors = raw["vec"].astype(np.float32).reshape(count, dim)
    if not np.isfinite(vectors).all():
        raise DataError("CEF payload contains non-finite floats")
    return EmbeddingDataset(int(dim), labels, vectors)


def read_csv(source) -> EmbeddingDataset:
    """Import `label,f0,...,f{dim-1}` CSV (interop/debugging companion to CEF)."""
    if isinstance(source, (str, Path)):
        with open(source, "r", newline="") as stream:
            return read_csv(stream)
    stream: TextIO = source
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty CSV") from None
    dim = len(header) - 1
    expected = ["label"] + [f"f{i}" for i in range(dim)]
    if dim < 1 or header != expected:
        raise FormatError(f"CSV header must be label,f0,...,f{{dim-1}}, got {header}")
    labels: list[int] = []
    rows: list[list[float]] = []
    for line_no, row in enumerate(reader, start=2):
        if len(row) != dim + 1:
            raise FormatError(f"CSV line {line_no} has {len(row)} fields, expected {dim + 1}")
        labels.append(int(row[0]))
        rows.append([float(v) for v in row[1:]])
    vectors = np.asarray(rows, dtype=np.float32).reshape(len(rows), dim)
    return EmbeddingDataset(dim, labels, vectors)


def make_synthetic(
    num_classes: int,
    per_class: int,
    dim: int,
    separation: float,
    spread: float,
    seed: int,
) -> EmbeddingDataset:
    """Draw isotropic Gaussian clusters with pairwise-separated means.

    Means are placed by seeded rejection sampling inside a hypercube of side
    10 * separation; samples are mean + spread * standard normal. The same
    arguments always produce a bit-identical dataset.
    """
    if num_classes < 1 or per_class < 1 or dim < 1:
        raise ConfigError("num_classes, per_class and dim must be positive")
    if not (separation > 0 and spread > 0):
        raise ConfigError("separation and spread must be positive")
    rng = np.random.default_rng(seed)
    side = _MEAN_BOX_FACTOR * separation
    means = np.empty((num_classes, dim))
    for i in range(num_classes):
        for attempt in range(_MEAN_MAX_TRIES):
            candidate = rng.uniform(0.0, side, size=dim)
            if i == 0 or np.linalg.norm(means[:i] - candidate, axis=1).min() >= separation:
                means[i] = candidate
                break
        else:
            raise ConfigError(
                f"could not place mean {i} at separation {separation} "
                f"after {_MEAN_MAX_TRIES} tries"
            )
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), per_class)
    samples = np.empty((num_classes * per_class, dim))
    for i in range(num_classes):
        block = slice(i * per_class, (i + 1) * per_class)
        samples[block] = means[i] + spread * rng.standard_normal((per_class, dim))
    return EmbeddingDataset(dim, labels, samples.astype(np.float32))


@dataclass(frozen=True)
class IncrementPlan:
    """Class-batch schedule for one incremental run."""

    class_batches: tuple[tuple[int, ...], ...]
    shots: int | None
    seed: int

    def __post_init__(self):
        seen: set[int] = set()
        for batch in self.class_batches:
            for cid in batch:
                if cid in seen:
                    raise ValidationError(f"class {cid} appears in more than one batch")
                seen.add(cid)
        if self.shots is not None and self.shots < 1:
            raise ValidationError("shots must be >= 1 when given")


@dataclass(frozen=True)
class IncrementSplits:
    """An increment plan together with per-class train/test record indices.

    Train indices point into the training dataset, test indices into the test
    dataset (the same dataset when the split was derived internally).
    """

    plan: IncrementPlan
    train_indices: dict[int, np.ndarray]
    test_indices: dict[int, np.ndarray]


def plan_increments(
    dataset: EmbeddingDataset,
    classes_per_batch: int,
    shots: int | None = None,
    seed: int = 0,
    test_dataset: EmbeddingDataset | None = None,
    test_fraction: float = 0.2,
    shuffle_within_class: bool = False,
) -> IncrementSplits:
    """Shuffle classes by seed, slice them into batches, and fix train/test indices.

    Without a separate test dataset each class is split train/test at
    `1 - test_fraction` (seeded, per class). With `shots=n`, exactly n training
    indices are sampled per class without replacement. Test indices never
    overlap train indices. The split draw order is independent of
    classes_per_batch, so plans over the same dataset and seed share splits.
    """
    classes = dataset.classes
    if not classes:
        raise ConfigError("dataset has no records")
    if not 1 <= classes_per_batch <= len(classes):
        raise ConfigError(
            f"classes_per_batch={classes_per_batch} invalid for {len(classes)} classes"
        )
    rng = np.random.default_rng(seed)
    order = [classes[i] for i in rng.permutation(len(classes))]
    batches = tuple(
        tuple(order[i : i + classes_per_batch]) for i in range(0, len(order), classes_per_batch)
    )

    train_indices: dict[int, np.ndarray] = {}
    test_indices: dict[int, np.ndarray] = {}
    for cid in classes:  # sorted, so rng consumption does not depend on the shuffle
        idx = dataset.class_index[cid]
        if test_dataset is not None:
            train_pool = idx
            test_idx = test_dataset.class_index.get(cid, np.empty(0, dtype=np.int64))
        else:
            perm = rng.permutation(len(idx))
            n_train = int(round(len(idx) * (1.0 - test_fraction)))
            if len(idx) >= 2:
                n_train = min(max(n_train, 1), len(idx) - 1)
            train_pool = np.sort(idx[perm[:n_train]])
            test_idx = np.sort(idx[perm[n_train:]])
        if shots is not None:
            if shots > len(train_pool):
                raise ConfigError(
                    f"shots={shots} exceeds the {len(train_pool)} training samples of class {cid}"
                )
            pick = rng.choice(len(train_pool), size=shots, replace=False)
            train_pool = train_pool[np.sort(pick)]
        if shuffle_within_class:
            train_pool = train_pool[rng.permutation(len(train_pool))]
        else:
            train_pool = np.sort(train_pool)
        train_indices[cid] = train_pool
        test_indices[cid] = np.asarray(test_idx, dtype=np.int64)

    plan = IncrementPlan(class_batches=batches, shots=shots, seed=int(seed))
    return IncrementSplits(plan=plan, train_indices=train_indices, test_indices=test_indices)
