import pickle

import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def image_tree(tmp_path):
    """Tiny folder-per-class tree: 2 classes x 2 deterministic 32x32 images."""
    rng = np.random.default_rng(42)
    root = tmp_path / "images"
    for cls in ("cat", "dog"):
        d = root / cls
        d.mkdir(parents=True)
        for i in range(2):
            pixels = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
            Image.fromarray(pixels, "RGB").save(d / f"{cls}_{i}.png")
    return root


@pytest.fixture
def mini_cifar(tmp_path):
    """CIFAR-100-shaped pickle directory: 8 train rows, 4 test rows."""
    rng = np.random.default_rng(7)
    root = tmp_path / "cifar-100-python"
    root.mkdir()

    def split(n, labels):
        return {
            b"data": rng.integers(0, 256, size=(n, 3072), dtype=np.uint8),
            b"fine_labels": labels,
        }

    with open(root / "train", "wb") as fh:
        pickle.dump(split(8, [0, 0, 1, 1, 2, 2, 3, 3]), fh)
    with open(root / "test", "wb") as fh:
        pickle.dump(split(4, [0, 1, 2, 3]), fh)
    with open(root / "meta", "wb") as fh:
        pickle.dump({b"fine_label_names": [f"class_{i}".encode() for i in range(100)]}, fh)
    return tmp_path
