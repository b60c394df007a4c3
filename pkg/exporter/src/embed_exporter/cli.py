"""Command-line entry: ``export --input apps.jsonl --output emb.bin``.

Exit codes: 1 usage or encoder error, 2 dataset error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ExportError, UsageError
from .export import DEFAULT_MODEL, ExportJob, export


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _make_parser() -> _Parser:
    parser = _Parser(prog="export",
                     description="Encode app descriptions with a sentence "
                                 "encoder and write an EMB1 embedding file")
    parser.add_argument("--input", required=True,
                        help="JSON Lines dataset with app_id/description")
    parser.add_argument("--output", required=True,
                        help="EMB1 file to write")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help="sentence-transformers model id or local path")
    parser.add_argument("--batch", type=int, default=32,
                        help="encoder batch size")
    parser.add_argument("--no-normalize", action="store_true",
                        help="keep raw encoder vectors instead of "
                             "L2-normalizing")
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = _make_parser().parse_args(argv)
        job = ExportJob(input_path=args.input, output_path=args.output,
                        model_id=args.model, batch_size=args.batch,
                        normalize=not args.no_normalize)
        result = export(job)
        print(f"wrote {result.count} vectors (dim {result.dim}) to "
              f"{args.output}")
        return 0
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


def entry() -> None:
    sys.exit(main())
