"""CIFAR-100 reproduction gates.

These need real assets that cannot be fetched in an offline environment:
the CIFAR-100 archive and ImageNet-pretrained backbone weights. Prepare
embeddings once:

    cbcl-extract --data cifar-100-python.tar.gz --backbone resnet34 \
        --split train --out $CBCL_CIFAR100_DIR/train.cef
    cbcl-extract --data cifar-100-python.tar.gz --backbone resnet34 \
        --split test  --out $CBCL_CIFAR100_DIR/test.cef

then run with CBCL_CIFAR100_DIR set (several hours of CPU: 10 runs x 10
increments with per-increment cross-validation). Tolerances are wide because
the reference figures do not pin the exact image preprocessing.
"""

import os
from pathlib import Path

import pytest

cbcl = pytest.importorskip("cbcl")

DATA_DIR = os.environ.get("CBCL_CIFAR100_DIR", "")
HAVE_DATA = bool(DATA_DIR) and (Path(DATA_DIR) / "train.cef").exists() \
    and (Path(DATA_DIR) / "test.cef").exists()

pytestmark = pytest.mark.skipif(
    not HAVE_DATA,
    reason="set CBCL_CIFAR100_DIR to a directory holding extracted train.cef/test.cef",
)


@pytest.fixture(scope="module")
def cifar():
    train = cbcl.read_cef(Path(DATA_DIR) / "train.cef")
    test = cbcl.read_cef(Path(DATA_DIR) / "test.cef")
    assert len(train) == 50_000 and len(test) == 10_000 and train.dim == 512
    return train, test


def run(train, test, **overrides):
    settings = dict(classes_per_batch=10, runs=10, seed=0, budget=7500, folds=3)
    settings.update(overrides)
    return cbcl.run_experiment(train, cbcl.ExperimentConfig(**settings), test_dataset=test)


def test_incremental_reproduction(cifar):
    result = run(*cifar)
    assert abs(result.average_incremental_accuracy * 100 - 69.85) <= 3.0
    assert abs(result.final_accuracy_mean * 100 - 60.0) <= 3.0


def test_five_shot_reproduction(cifar):
    result = run(*cifar, shots=5)
    assert abs(result.average_incremental_accuracy * 100 - 54.7) <= 4.0


def test_ten_shot_reproduction(cifar):
    result = run(*cifar, shots=10)
    assert abs(result.average_incremental_accuracy * 100 - 61.3) <= 4.0


def test_ncm_ablation(cifar):
    result = run(*cifar, mode="ncm")
    assert abs(result.average_incremental_accuracy * 100 - 58.25) <= 3.0
