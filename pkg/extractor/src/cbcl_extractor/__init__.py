"""Image datasets to CEF embedding files via pretrained CNN backbones."""

from .backbones import FEATURE_DIMS, get_backbone, preprocess
from .cef import write_cef
from .extract import ExtractionStats, extract
from .sources import Cifar100Source, FolderSource, open_source

__version__ = "0.1.0"

__all__ = [
    "Cifar100Source",
    "ExtractionStats",
    "FEATURE_DIMS",
    "FolderSource",
    "extract",
    "get_backbone",
    "open_source",
    "preprocess",
    "write_cef",
]
