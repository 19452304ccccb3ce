"""CLI: embed an image dataset into a CEF file.

    cbcl-extract --data <path> --backbone resnet34 --split train --out train.cef
"""

from __future__ import annotations

import argparse
import sys

from .backbones import FEATURE_DIMS
from .extract import extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbcl-extract",
        description="Embed an image dataset (folder-per-class or CIFAR-100 archive) as CEF",
    )
    parser.add_argument("--data", required=True, help="dataset root or CIFAR-100 archive")
    parser.add_argument("--backbone", choices=sorted(FEATURE_DIMS), default="resnet34")
    parser.add_argument("--split", choices=("train", "test"), default="train")
    parser.add_argument("--out", required=True, help="CEF destination path")
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument(
        "--random-weights", action="store_true",
        help="skip the pretrained weights (offline smoke runs only)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        stats = extract(
            args.data,
            backbone=args.backbone,
            split=args.split,
            output_path=args.out,
            pretrained=not args.random_weights,
            batch_size=args.batch_size,
        )
    except (OSError, ValueError) as exc:
        print(f"cbcl-extract: error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {stats.records} records (dim {stats.dim}, "
          f"{len(stats.class_names)} classes, {stats.skipped} skipped) to {args.out}")
    return 0


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
