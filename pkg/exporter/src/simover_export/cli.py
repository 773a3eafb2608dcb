"""Command-line exporter: raw text records in, an instance file out."""

from __future__ import annotations

import argparse
import logging
import sys

from .encoders import EncoderError
from .export import ExportError, export, read_class_list, read_raw_records

DEFAULT_MODEL = "all-roberta-large-v1"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simover-export", description=__doc__)
    parser.add_argument("--input", required=True, help="line-delimited raw text records")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help=f"encoder model id (default {DEFAULT_MODEL})")
    parser.add_argument("--classes", required=True, help="file with one class name per line")
    parser.add_argument("--out", required=True, help="instance file to write")
    parser.add_argument("--raw-text", action="store_true",
                        help="embed the original text instead of the cleaned tokens")
    parser.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        records = read_raw_records(args.input)
        class_names = read_class_list(args.classes)
        written = export(
            records,
            args.model,
            class_names,
            args.out,
            raw_text=args.raw_text,
            batch_size=args.batch_size,
        )
    except (ExportError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except EncoderError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {written} instances to {args.out}")
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
