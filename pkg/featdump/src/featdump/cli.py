"""Command-line entry point.

One command, one job: pick a mode, point at a manifest, get an embedding
file.  Warnings about skipped or empty inputs go to stderr; the summary
line reports how many rows were written and where.  Exit status 0 means
the output was written, 1 means a validation or I/O failure, 2 a usage
error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .jobs import ExtractionJob, run_job
from .models import MODES


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featdump",
        description="Extract pretrained audio or text embeddings for a manifest.",
    )
    parser.add_argument(
        "--mode",
        required=True,
        choices=MODES,
        help="audio-ast embeds WAV files; text-bert and text-sbert embed "
        "species descriptions",
    )
    parser.add_argument(
        "--manifest",
        required=True,
        help="tab-separated rows: audio path or description text, then species id",
    )
    parser.add_argument("--out", required=True, help="embedding file to write")
    parser.add_argument(
        "--lock",
        default=None,
        metavar="PATH",
        help="lock file pinning mode -> model identifier "
        "(default: the packaged pins)",
    )
    parser.add_argument(
        "--sample-rate",
        type=int,
        default=16_000,
        help="target rate audio is resampled to (default 16000)",
    )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExtractionJob(
            mode=args.mode,
            manifest_path=args.manifest,
            output_path=args.out,
            lock_path=args.lock,
            sample_rate=args.sample_rate,
        )
        result = run_job(job)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    summary = (
        f"{args.mode}: {result.rows_written} rows x {result.dim} dims "
        f"({result.model}) -> {result.output_path}"
    )
    if result.failures:
        summary += f"; {len(result.failures)} skipped, see {result.failures_path}"
    print(summary, file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
