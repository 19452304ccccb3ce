"""Writer for the CEF embedding container.

The byte layout is the interface contract with the learning toolkit:

    magic "CEF1" | dim: u32 | count: u64 | count x [label: u32 | dim x f32]

little-endian throughout.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

CEF_MAGIC = b"CEF1"
_HEADER = struct.Struct("<4sIQ")


def write_cef(labels, vectors, destination) -> None:
    """Write labeled float32 vectors as a CEF file."""
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    labels = np.asarray(labels, dtype=np.int64)
    if vectors.ndim != 2:
        raise ValueError(f"vectors must be (count, dim), got shape {vectors.shape}")
    if labels.shape != (len(vectors),):
        raise ValueError("labels and vectors must have matching length")
    if len(labels) and (labels.min() < 0 or labels.max() >= 2**32):
        raise ValueError("labels must fit in an unsigned 32-bit integer")
    if not np.isfinite(vectors).all():
        raise ValueError("vectors must be finite")
    dim = vectors.shape[1]
    record = np.dtype([("label", "<u4"), ("vec", "<f4", (dim,))])
    out = np.empty(len(labels), dtype=record)
    out["label"] = labels.astype(np.uint32)
    out["vec"] = vectors
    with open(Path(destination), "wb") as sink:
        sink.write(_HEADER.pack(CEF_MAGIC, dim, len(labels)))
        sink.write(out.tobytes())
