"""Command-line entry point.

Four subcommands cover the full workflow:

    preprocess   turn a raw attribute table (or a precomputed embedding
                 file) into a class-embedding table plus an audit file
    split        build the five-fold species manifest from an acoustic
                 embedding file
    train-eval   train and evaluate every class source on every fold,
                 writing reports, models and epoch histories
    similarity   write the pairwise cosine-similarity grid of each source

All commands validate and compute first and only then write, so a failed
run leaves no partial outputs.  Human-readable progress goes to stderr;
results go to the requested files.  Exit status 0 means every output was
written, 1 means a validation or I/O failure, 2 a usage error.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path
from typing import Sequence

from . import io as azio
from .data import ClassEmbeddingTable
from .experiment import TrainingConfig, make_splits, run_experiment
from .metadata import (
    PreprocessAudit,
    concat_tables,
    cosine_similarity_matrix,
    preprocess_attribute_table,
)

_SOURCE_NAME = re.compile(r"^[A-Za-z0-9_.+-]+$")


def _check_source_name(name: str) -> str:
    if not _SOURCE_NAME.match(name):
        raise ValueError(
            f"source name {name!r} may only use letters, digits, '_', '.', '+' and '-'"
        )
    return name


def _parse_source_args(pairs: Sequence[str]) -> dict[str, Path]:
    """Each --class-source argument is NAME=PATH; names must be unique."""
    sources: dict[str, Path] = {}
    for pair in pairs:
        name, sep, path = pair.partition("=")
        if not sep or not name or not path:
            raise ValueError(f"--class-source needs NAME=PATH, got {pair!r}")
        _check_source_name(name)
        if name in sources:
            raise ValueError(f"duplicate class source {name!r}")
        sources[name] = Path(path)
    return sources


def _load_sources(
    source_args: Sequence[str], concat_args: Sequence[str]
) -> dict[str, ClassEmbeddingTable]:
    """Load every NAME=PATH table, then build the requested concatenations.

    A --concat argument like ``a+b`` joins the vectors of already-loaded
    sources ``a`` and ``b`` (in that order) into a new source named
    ``a+b``.
    """
    paths = _parse_source_args(source_args)
    if not paths:
        raise ValueError("at least one --class-source is required")
    tables: dict[str, ClassEmbeddingTable] = {
        name: azio.read_class_table(path, source_name=name)
        for name, path in paths.items()
    }
    for spec in concat_args:
        parts = spec.split("+")
        if len(parts) < 2 or not all(parts):
            raise ValueError(f"--concat needs NAME+NAME[+...], got {spec!r}")
        unknown = [p for p in parts if p not in tables]
        if unknown:
            raise ValueError(
                f"--concat {spec!r} references unknown sources: {', '.join(unknown)}"
            )
        combined = concat_tables([tables[p] for p in parts])
        if combined.source_name in tables:
            raise ValueError(f"duplicate class source {combined.source_name!r}")
        tables[combined.source_name] = combined
    return tables


def _cmd_preprocess(args: argparse.Namespace) -> int:
    name = _check_source_name(args.source_name)
    out_dir = Path(args.out)
    if args.kind == "attributes":
        raw = azio.read_attribute_table(args.input)
        exclude = (
            azio.read_exclusion_list(args.exclude_columns)
            if args.exclude_columns is not None
            else ()
        )
        max_missing = 10 if args.max_missing is None else args.max_missing
        table, audit = preprocess_attribute_table(
            raw, max_missing=max_missing, exclude_columns=exclude, source_name=name
        )
    else:
        if args.max_missing is not None or args.exclude_columns is not None:
            raise ValueError(
                "--max-missing and --exclude-columns only apply to --kind attributes"
            )
        table = azio.read_class_table(args.input, source_name=name)
        audit = PreprocessAudit(
            source_name=name,
            excluded_columns=(),
            dropped_columns=(),
            label_encodings={},
            column_ranges={},
        )
    out_dir.mkdir(parents=True, exist_ok=True)
    classes_path = out_dir / f"{name}.classes.csv"
    audit_path = out_dir / f"{name}.audit.json"
    azio.write_class_table(classes_path, table)
    azio.write_preprocess_audit(
        audit_path, audit, n_species=len(table), class_dim=table.class_dim
    )
    print(
        f"{name}: {len(table)} species x {table.class_dim} dimensions "
        f"-> {classes_path}",
        file=sys.stderr,
    )
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    samples = azio.read_acoustic_embeddings(args.audio_embeddings)
    species = sorted({s.species_id for s in samples})
    manifest = make_splits(species, seed=args.seed)
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    azio.write_manifest(out, manifest)
    for i, fold in enumerate(manifest.folds, start=1):
        print(
            f"fold {i}: train {len(fold.train_species)}, "
            f"dev {len(fold.dev_species)}, test {len(fold.test_species)}",
            file=sys.stderr,
        )
    print(f"manifest for {len(species)} species -> {out}", file=sys.stderr)
    return 0


def _cmd_train_eval(args: argparse.Namespace) -> int:
    samples = azio.read_acoustic_embeddings(args.audio_embeddings)
    manifest = azio.read_manifest(args.manifest)
    tables = _load_sources(args.class_source, args.concat or [])
    cfg = TrainingConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    results = {}
    for name, table in tables.items():
        print(
            f"running {name}: 5 folds x {cfg.epochs} epochs "
            f"(class dim {table.class_dim})",
            file=sys.stderr,
        )
        results[name] = run_experiment(manifest, samples, table, cfg)
        print(
            f"  {name}: mean test macro F1 {results[name].test_mean.macro_f1:.3f}",
            file=sys.stderr,
        )

    out_dir = Path(args.out)
    models_dir = out_dir / "models"
    history_dir = out_dir / "history"
    models_dir.mkdir(parents=True, exist_ok=True)
    history_dir.mkdir(parents=True, exist_ok=True)
    azio.write_report_json(out_dir / "report.json", results)
    azio.write_report_table(out_dir / "report.txt", results)
    for name, result in results.items():
        for outcome in result.folds:
            stem = f"{name}-fold{outcome.fold_index}"
            azio.write_model(models_dir / f"{stem}.model", outcome.best_model)
            azio.write_epoch_history(history_dir / f"{stem}.jsonl", outcome.history)

    print(azio.render_report_table(results), file=sys.stderr, end="")
    best = max(results.items(), key=lambda item: item[1].test_mean.macro_f1)
    print(
        f"best source by test macro F1: {best[0]} ({best[1].test_mean.macro_f1:.3f})",
        file=sys.stderr,
    )
    print(f"report -> {out_dir / 'report.json'}", file=sys.stderr)
    return 0


def _cmd_similarity(args: argparse.Namespace) -> int:
    tables = _load_sources(args.class_source, args.concat or [])
    matrices = {
        name: cosine_similarity_matrix(table) for name, table in tables.items()
    }
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, matrix in matrices.items():
        path = out_dir / f"{name}.similarity.csv"
        azio.write_similarity_matrix(path, matrix)
        print(f"{name}: {len(matrix.species_ids)} species -> {path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="audiozsl",
        description="Zero-shot audio classification from class metadata.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "preprocess", help="build a class-embedding table from raw attributes"
    )
    p.add_argument("--input", required=True, help="attribute table or embedding file")
    p.add_argument(
        "--kind",
        choices=("attributes", "embeddings"),
        default="attributes",
        help="'attributes' runs the preprocessing pipeline; 'embeddings' "
        "re-emits a precomputed embedding file as a class table",
    )
    p.add_argument("--source-name", required=True, help="name for the class source")
    p.add_argument(
        "--max-missing",
        type=int,
        default=None,
        help="drop columns with more missing values than this (default 10)",
    )
    p.add_argument(
        "--exclude-columns",
        default=None,
        metavar="PATH",
        help="file of column names (one per line) to remove before the pipeline",
    )
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=_cmd_preprocess)

    p = sub.add_parser("split", help="build the five-fold species manifest")
    p.add_argument("--audio-embeddings", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="manifest JSON path")
    p.set_defaults(handler=_cmd_split)

    p = sub.add_parser(
        "train-eval", help="train and evaluate every class source on every fold"
    )
    p.add_argument("--audio-embeddings", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument(
        "--class-source",
        action="append",
        default=[],
        metavar="NAME=PATH",
        help="class-embedding table to evaluate (repeatable)",
    )
    p.add_argument(
        "--concat",
        action="append",
        default=[],
        metavar="NAME+NAME",
        help="also evaluate the concatenation of already-named sources (repeatable)",
    )
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.0001)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=_cmd_train_eval)

    p = sub.add_parser(
        "similarity", help="pairwise cosine similarities of each class source"
    )
    p.add_argument(
        "--class-source", action="append", default=[], metavar="NAME=PATH"
    )
    p.add_argument("--concat", action="append", default=[], metavar="NAME+NAME")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=_cmd_similarity)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
