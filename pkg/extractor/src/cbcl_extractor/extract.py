"""Convert an image dataset into a CEF embedding file with a CNN backbone."""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .backbones import FEATURE_DIMS, embed_batch, get_backbone, preprocess
from .cef import write_cef
from .sources import open_source


@dataclass(frozen=True)
class ExtractionStats:
    records: int
    skipped: int
    dim: int
    class_names: tuple[str, ...]


def extract(
    dataset_path,
    backbone: str = "resnet34",
    split: str = "train",
    output_path=None,
    pretrained: bool = True,
    batch_size: int = 64,
    write_label_names: bool = True,
) -> ExtractionStats:
    """Embed every image of one dataset split and write the vectors as CEF.

    Images pass through the backbone's canonical evaluation preprocessing
    (resize, center-crop, channel normalization; small images are upsampled),
    so repeated extractions of the same data are identical. Unreadable images
    are skipped and counted. With `write_label_names` a `<output>.labels.txt`
    sidecar maps label ids to class names.
    """
    if output_path is None:
        raise ValueError("output_path is required")
    if split not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    model = get_backbone(backbone, pretrained=pretrained)
    source = open_source(dataset_path, split)

    labels: list[int] = []
    chunks: list[np.ndarray] = []
    batch: list[torch.Tensor] = []

    def flush():
        if batch:
            features = embed_batch(model, torch.stack(batch))
            chunks.append(features.cpu().numpy().astype(np.float32))
            batch.clear()

    for item in source:
        batch.append(preprocess(item.image))
        labels.append(item.label)
        if len(batch) >= batch_size:
            flush()
    flush()

    if not labels:
        raise ValueError(f"no images found under {dataset_path}")
    vectors = np.vstack(chunks)
    assert vectors.shape[1] == FEATURE_DIMS[backbone]
    write_cef(labels, vectors, output_path)
    if write_label_names:
        sidecar = Path(str(output_path) + ".labels.txt")
        sidecar.write_text(
            "".join(f"{i}\t{name}\n" for i, name in enumerate(source.class_names))
        )
    if source.skipped:
        print(f"warning: skipped {source.skipped} unreadable image(s)", file=sys.stderr)
    return ExtractionStats(
        records=len(labels),
        skipped=source.skipped,
        dim=vectors.shape[1],
        class_names=tuple(source.class_names),
    )
