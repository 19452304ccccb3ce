"""Image sources: folder-per-class trees and CIFAR-100 python archives.

Both yield (PIL image, integer label) pairs in a deterministic order plus the
class-name table, so the embedding file is reproducible for a given dataset.
"""

from __future__ import annotations

import pickle
import tarfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

IMAGE_SUFFIXES = {".bmp", ".gif", ".jpeg", ".jpg", ".png", ".ppm", ".tif", ".tiff", ".webp"}

_CIFAR_SPLIT_FILES = {"train": "train", "test": "test"}


@dataclass
class SourceItem:
    image: Image.Image
    label: int


class DatasetSource:
    """Iterable of labeled images with bookkeeping for unreadable files."""

    def __init__(self, class_names: list[str]):
        self.class_names = class_names
        self.skipped = 0

    def __iter__(self) -> Iterator[SourceItem]:  # pragma: no cover - interface
        raise NotImplementedError


class FolderSource(DatasetSource):
    """Folder-per-class layout: root/<class>/<image files>.

    When root/<split> exists it is used as the actual root, so presplit trees
    (root/train/<class>, root/test/<class>) and flat trees both work. Class
    names are sorted and mapped to labels 0..C-1. Unreadable images are
    skipped and counted; a class directory without a single readable image is
    an error.
    """

    def __init__(self, root, split: str):
        root = Path(root)
        if (root / split).is_dir():
            root = root / split
        class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
        if not class_dirs:
            raise FileNotFoundError(f"no class directories under {root}")
        super().__init__([p.name for p in class_dirs])
        self._class_dirs = class_dirs

    def __iter__(self) -> Iterator[SourceItem]:
        for label, class_dir in enumerate(self._class_dirs):
            produced = 0
            files = sorted(
                p for p in class_dir.iterdir()
                if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
            )
            for path in files:
                try:
                    with Image.open(path) as img:
                        image = img.convert("RGB")
                except OSError:
                    self.skipped += 1
                    continue
                produced += 1
                yield SourceItem(image, label)
            if produced == 0:
                raise ValueError(f"class directory {class_dir} has no readable images")


class Cifar100Source(DatasetSource):
    """CIFAR-100 python-pickle archives, as a directory or .tar.gz.

    Rows are 3072 uint8 values (three 1024-byte planes of a 32x32 RGB image);
    fine labels index the 100 fine classes.
    """

    def __init__(self, path, split: str):
        if split not in _CIFAR_SPLIT_FILES:
            raise ValueError(f"split must be 'train' or 'test', got {split!r}")
        payload, meta = _load_cifar_pickles(Path(path), _CIFAR_SPLIT_FILES[split])
        names = [n.decode() if isinstance(n, bytes) else n for n in meta[b"fine_label_names"]]
        super().__init__(names)
        data = np.asarray(payload[b"data"], dtype=np.uint8)
        self._images = data.reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1)
        self._labels = [int(v) for v in payload[b"fine_labels"]]

    def __len__(self) -> int:
        return len(self._labels)

    def __iter__(self) -> Iterator[SourceItem]:
        for row, label in zip(self._images, self._labels):
            yield SourceItem(Image.fromarray(row, mode="RGB"), label)


def _load_cifar_pickles(path: Path, split_file: str) -> tuple[dict, dict]:
    if path.is_file() and path.name.endswith((".tar.gz", ".tgz")):
        with tarfile.open(path, "r:gz") as archive:
            members = {Path(m.name).name: m for m in archive.getmembers() if m.isfile()}
            for needed in (split_file, "meta"):
                if needed not in members:
                    raise FileNotFoundError(f"{path} is missing the {needed!r} member")
            payload = pickle.load(archive.extractfile(members[split_file]), encoding="bytes")
            meta = pickle.load(archive.extractfile(members["meta"]), encoding="bytes")
            return payload, meta
    root = path if (path / split_file).exists() else path / "cifar-100-python"
    split_path = root / split_file
    meta_path = root / "meta"
    if not split_path.exists() or not meta_path.exists():
        raise FileNotFoundError(f"no CIFAR-100 {split_file!r}/meta pickles under {path}")
    with open(split_path, "rb") as fh:
        payload = pickle.load(fh, encoding="bytes")
    with open(meta_path, "rb") as fh:
        meta = pickle.load(fh, encoding="bytes")
    return payload, meta


def open_source(path, split: str) -> DatasetSource:
    """Pick the loader for `path`: CIFAR-100 archive or folder-per-class tree."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset path {path} does not exist")
    if path.is_file():
        return Cifar100Source(path, split)
    if (path / "cifar-100-python").is_dir() or (path / "meta").exists():
        return Cifar100Source(path, split)
    return FolderSource(path, split)
