"""CLI: embed an image dataset with a frozen backbone into a feature file."""

from __future__ import annotations

import argparse
import sys

from .backbones import available_backbones
from .errors import ExtractorError
from .extract import ExtractionJob, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anacp-extract",
        description="Run a frozen vision backbone over a dataset and write "
        "embeddings in the anacp feature-file format.",
    )
    parser.add_argument("--backbone", required=True,
                        help=f"one of {available_backbones()} or a registered id")
    parser.add_argument("--dataset", required=True, help="'folder:<root>' or 'cifar100'")
    parser.add_argument("--split", default="train")
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--expected-classes", type=int, default=None)
    parser.add_argument("--out", default="features.feat")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExtractionJob(
        backbone=args.backbone,
        dataset=args.dataset,
        split=args.split,
        batch_size=args.batch_size,
        device=args.device,
        output=args.out,
        expected_classes=args.expected_classes,
    )
    try:
        path = extract(job)
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
