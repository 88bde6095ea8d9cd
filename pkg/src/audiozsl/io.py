"""File formats for embeddings, tables, manifests, models and reports.

Everything is delimiter-separated or JSON text.  Floats are written with
``repr`` so values survive a write/read round trip bit for bit; rendered
report tables round to three decimals for reading, while the data files
keep full precision.

Embedding files (shared by acoustic samples and class tables)::

    # optional comment lines
    id,label,<dim>
    <id>,<label>,<dim comma-separated floats>

Acoustic files carry the species in the label field; class tables leave
it empty and use the id field for the species.  Parse failures raise
``ValueError`` with path and line number.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import AcousticEmbedding, ClassEmbedding, ClassEmbeddingTable
from .experiment import EpochRecord, ExperimentResult, Fold, SplitManifest
from .metadata import PreprocessAudit, RawAttributeTable, SimilarityMatrix
from .metrics import MetricsReport
from .model import ProjectionModel

MISSING_TOKENS = ("", "NA")


def _fmt(value: float) -> str:
    return repr(float(value))


def _parse_error(path, line: int, message: str) -> ValueError:
    return ValueError(f"{path}:{line}: {message}")


# ---------------------------------------------------------------------------
# Embedding files


@dataclass(frozen=True)
class EmbeddingRow:
    line: int
    row_id: str
    label: str
    vector: np.ndarray


@dataclass(frozen=True)
class EmbeddingFileData:
    dim: int
    rows: tuple[EmbeddingRow, ...]
    comments: tuple[str, ...]


def read_embedding_file(path) -> EmbeddingFileData:
    """Parse an embedding file; validates the header and every row width."""
    comments: list[str] = []
    rows: list[EmbeddingRow] = []
    dim: int | None = None
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        for record in reader:
            line = reader.line_num
            if not record:
                continue
            if record[0].startswith("#"):
                comments.append(",".join(record))
                continue
            if dim is None:
                if len(record) != 3 or record[0] != "id" or record[1] != "label":
                    raise _parse_error(
                        path, line, "expected header 'id,label,<dim>'"
                    )
                try:
                    dim = int(record[2])
                except ValueError:
                    raise _parse_error(
                        path, line, f"header dimension {record[2]!r} is not an integer"
                    ) from None
                if dim < 1:
                    raise _parse_error(path, line, f"dimension must be positive, got {dim}")
                continue
            if len(record) != 2 + dim:
                raise _parse_error(
                    path, line,
                    f"expected {2 + dim} fields (id, label, {dim} values), got {len(record)}",
                )
            values = np.empty(dim, dtype=np.float64)
            for j, field in enumerate(record[2:]):
                try:
                    values[j] = float(field)
                except ValueError:
                    raise _parse_error(
                        path, line, f"column {j + 3}: {field!r} is not a number"
                    ) from None
            if not np.all(np.isfinite(values)):
                raise _parse_error(path, line, "vector contains non-finite values")
            rows.append(EmbeddingRow(line=line, row_id=record[0], label=record[1], vector=values))
    if dim is None:
        raise _parse_error(path, 1, "missing header 'id,label,<dim>'")
    return EmbeddingFileData(dim=dim, rows=tuple(rows), comments=tuple(comments))


def write_embedding_file(
    path,
    dim: int,
    rows: Iterable[tuple[str, str, np.ndarray]],
    comments: Sequence[str] = (),
) -> None:
    with open(path, "w", newline="") as handle:
        for comment in comments:
            text = comment if comment.startswith("#") else f"# {comment}"
            handle.write(text + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["id", "label", str(dim)])
        for row_id, label, vector in rows:
            vector = np.asarray(vector, dtype=np.float64)
            if vector.shape != (dim,):
                raise ValueError(
                    f"row {row_id!r}: vector shape {vector.shape} does not match dim {dim}"
                )
            writer.writerow([row_id, label] + [_fmt(v) for v in vector])


def read_acoustic_embeddings(path) -> list[AcousticEmbedding]:
    """Load an acoustic embedding file; every row needs a species label."""
    data = read_embedding_file(path)
    samples = []
    for row in data.rows:
        if not row.label:
            raise _parse_error(
                path, row.line, f"sample {row.row_id!r} has no species label"
            )
        samples.append(
            AcousticEmbedding(sample_id=row.row_id, species_id=row.label, vector=row.vector)
        )
    if not samples:
        raise ValueError(f"{path}: embedding file has no samples")
    return samples


def write_acoustic_embeddings(path, samples: Sequence[AcousticEmbedding]) -> None:
    if not samples:
        raise ValueError("no samples to write")
    dim = samples[0].dim
    write_embedding_file(
        path, dim, ((s.sample_id, s.species_id, s.vector) for s in samples)
    )


def read_class_table(path, source_name: str | None = None) -> ClassEmbeddingTable:
    """Load a class-embedding file (species in the id field, empty label)."""
    data = read_embedding_file(path)
    entries = []
    for row in data.rows:
        if row.label:
            raise _parse_error(
                path, row.line,
                f"class table row {row.row_id!r} has a non-empty label "
                f"{row.label!r}; is this an acoustic embedding file?",
            )
        entries.append(ClassEmbedding(species_id=row.row_id, vector=row.vector))
    if not entries:
        raise ValueError(f"{path}: class table has no entries")
    name = source_name if source_name is not None else Path(path).stem
    try:
        return ClassEmbeddingTable(source_name=name, entries=tuple(entries))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def write_class_table(path, table: ClassEmbeddingTable, comments: Sequence[str] = ()) -> None:
    write_embedding_file(
        path,
        table.class_dim,
        ((entry.species_id, "", entry.vector) for entry in table.entries),
        comments=comments,
    )


# ---------------------------------------------------------------------------
# Raw attribute tables


def read_attribute_table(path) -> RawAttributeTable:
    """Parse a delimiter-separated attribute table.

    The first header column names the species-id field; cells equal to ""
    or "NA" are missing, cells that parse as numbers are numeric, and
    everything else is kept as a string.
    """
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header: list[str] | None = None
        species: list[str] = []
        rows: list[tuple] = []
        for record in reader:
            line = reader.line_num
            if not record or (len(record) == 1 and not record[0].strip()):
                continue
            if header is None:
                header = [cell.strip() for cell in record]
                if len(header) < 2:
                    raise _parse_error(
                        path, line, "header needs a species column and at least one attribute"
                    )
                continue
            if len(record) != len(header):
                raise _parse_error(
                    path, line, f"expected {len(header)} fields, got {len(record)}"
                )
            species_id = record[0].strip()
            if not species_id:
                raise _parse_error(path, line, "empty species id")
            cells = []
            for field in record[1:]:
                text = field.strip()
                if text in MISSING_TOKENS:
                    cells.append(None)
                    continue
                try:
                    cells.append(float(text))
                except ValueError:
                    cells.append(text)
            species.append(species_id)
            rows.append(tuple(cells))
    if header is None:
        raise _parse_error(path, 1, "empty attribute table")
    if not rows:
        raise ValueError(f"{path}: attribute table has no data rows")
    try:
        return RawAttributeTable(
            species_ids=tuple(species),
            column_names=tuple(header[1:]),
            rows=tuple(rows),
        )
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def read_exclusion_list(path) -> tuple[str, ...]:
    """Column names to exclude, one per line; '#' comments and blanks skipped."""
    names: list[str] = []
    with open(path) as handle:
        for raw in handle:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            names.append(line)
    return tuple(names)


# ---------------------------------------------------------------------------
# Split manifests


def write_manifest(path, manifest: SplitManifest) -> None:
    payload = {
        "seed": manifest.seed,
        "folds": [
            {
                "train": sorted(fold.train_species),
                "dev": sorted(fold.dev_species),
                "test": sorted(fold.test_species),
            }
            for fold in manifest.folds
        ],
    }
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def read_manifest(path) -> SplitManifest:
    with open(path) as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON: {exc}") from None
    try:
        folds = tuple(
            Fold(
                train_species=frozenset(fold["train"]),
                dev_species=frozenset(fold["dev"]),
                test_species=frozenset(fold["test"]),
            )
            for fold in payload["folds"]
        )
        return SplitManifest(folds=folds, seed=int(payload["seed"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed manifest: {exc}") from None
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# Projection models


def write_model(path, model: ProjectionModel) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["audio_dim", "class_dim", "seed", "trained_epochs"])
        writer.writerow(
            [model.audio_dim, model.class_dim, model.seed, model.trained_epochs]
        )
        for row in model.weights:
            writer.writerow([_fmt(v) for v in row])


def read_model(path) -> ProjectionModel:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        records = [(reader.line_num, record) for record in reader if record]
    if len(records) < 2:
        raise ValueError(f"{path}: model file is truncated")
    header_line, header = records[0]
    if header != ["audio_dim", "class_dim", "seed", "trained_epochs"]:
        raise _parse_error(
            path, header_line, "expected header 'audio_dim,class_dim,seed,trained_epochs'"
        )
    meta_line, meta = records[1]
    try:
        audio_dim, class_dim, seed, trained_epochs = (int(v) for v in meta)
    except ValueError:
        raise _parse_error(path, meta_line, "metadata row must hold four integers") from None
    weight_records = records[2:]
    if len(weight_records) != audio_dim:
        raise ValueError(
            f"{path}: expected {audio_dim} weight rows, found {len(weight_records)}"
        )
    weights = np.empty((audio_dim, class_dim), dtype=np.float64)
    for i, (line, record) in enumerate(weight_records):
        if len(record) != class_dim:
            raise _parse_error(
                path, line, f"expected {class_dim} values, got {len(record)}"
            )
        try:
            weights[i] = [float(v) for v in record]
        except ValueError:
            raise _parse_error(path, line, "non-numeric weight value") from None
    return ProjectionModel(
        weights=weights,
        audio_dim=audio_dim,
        class_dim=class_dim,
        seed=seed,
        trained_epochs=trained_epochs,
    )


# ---------------------------------------------------------------------------
# Reports


def _metrics_dict(report: MetricsReport) -> dict:
    return {"acc": report.acc, "uar": report.uar, "macro_f1": report.macro_f1}


def experiment_report(results: Mapping[str, ExperimentResult]) -> dict:
    """JSON-ready report: per source, one block per fold plus an aggregate."""
    return {
        "sources": {
            name: {
                "folds": [
                    {"dev": _metrics_dict(o.dev), "test": _metrics_dict(o.test)}
                    for o in result.folds
                ],
                "aggregate": {
                    "dev": _metrics_dict(result.dev_mean),
                    "test": _metrics_dict(result.test_mean),
                },
            }
            for name, result in results.items()
        }
    }


def write_report_json(path, results: Mapping[str, ExperimentResult]) -> None:
    with open(path, "w") as handle:
        json.dump(experiment_report(results), handle, indent=2)
        handle.write("\n")


def _metric_cells(dev: MetricsReport, test: MetricsReport) -> list[str]:
    return [
        f"{value:.3f}"
        for value in (dev.acc, dev.uar, dev.macro_f1, test.acc, test.uar, test.macro_f1)
    ]


def render_report_table(results: Mapping[str, ExperimentResult]) -> str:
    """Three-decimal text report: per source, one row per fold plus the mean."""
    header = ["fold", "dev_acc", "dev_uar", "dev_f1", "test_acc", "test_uar", "test_f1"]
    blocks = []
    for name, result in results.items():
        rows = [header]
        for outcome in result.folds:
            rows.append([str(outcome.fold_index)] + _metric_cells(outcome.dev, outcome.test))
        rows.append(["mean"] + _metric_cells(result.dev_mean, result.test_mean))
        widths = [max(len(row[j]) for row in rows) for j in range(len(header))]
        lines = [f"source: {name}"]
        for row in rows:
            first = row[0].ljust(widths[0])
            rest = [cell.rjust(widths[j + 1]) for j, cell in enumerate(row[1:])]
            lines.append("  ".join([first] + rest).rstrip())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def write_report_table(path, results: Mapping[str, ExperimentResult]) -> None:
    with open(path, "w") as handle:
        handle.write(render_report_table(results))


def write_epoch_history(path, history: Sequence[EpochRecord]) -> None:
    """One JSON line per epoch: loss plus the dev metrics."""
    with open(path, "w") as handle:
        for record in history:
            handle.write(
                json.dumps(
                    {
                        "epoch": record.epoch,
                        "train_loss": record.train_loss,
                        "dev_acc": record.dev_metrics.acc,
                        "dev_uar": record.dev_metrics.uar,
                        "dev_macro_f1": record.dev_metrics.macro_f1,
                    }
                )
                + "\n"
            )


# ---------------------------------------------------------------------------
# Similarity matrices


def write_similarity_matrix(path, matrix: SimilarityMatrix) -> None:
    """Square grid: header row of species ids, one labelled row per species."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["species"] + list(matrix.species_ids))
        for species, row in zip(matrix.species_ids, matrix.values):
            writer.writerow([species] + [_fmt(v) for v in row])


def read_similarity_matrix(path) -> SimilarityMatrix:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        records = [(reader.line_num, r) for r in reader if r]
    if not records:
        raise ValueError(f"{path}: empty similarity file")
    _, header = records[0]
    if not header or header[0] != "species":
        raise _parse_error(path, records[0][0], "expected header starting with 'species'")
    species = tuple(header[1:])
    if len(records) - 1 != len(species):
        raise ValueError(
            f"{path}: expected {len(species)} rows, found {len(records) - 1}"
        )
    values = np.empty((len(species), len(species)), dtype=np.float64)
    for i, (line, record) in enumerate(records[1:]):
        if len(record) != len(species) + 1:
            raise _parse_error(
                path, line, f"expected {len(species) + 1} fields, got {len(record)}"
            )
        if record[0] != species[i]:
            raise _parse_error(
                path, line, f"row label {record[0]!r} does not match header order"
            )
        try:
            values[i] = [float(v) for v in record[1:]]
        except ValueError:
            raise _parse_error(path, line, "non-numeric similarity value") from None
    return SimilarityMatrix(species_ids=species, values=values)


# ---------------------------------------------------------------------------
# Preprocessing audits


def write_preprocess_audit(path, audit: PreprocessAudit, *, n_species: int, class_dim: int) -> None:
    payload = {
        "source": audit.source_name,
        "n_species": n_species,
        "class_dim": class_dim,
        "excluded_columns": list(audit.excluded_columns),
        "dropped_columns": list(audit.dropped_columns),
        "label_encodings": {
            column: dict(mapping) for column, mapping in audit.label_encodings.items()
        },
        "column_ranges": {
            column: [low, high] for column, (low, high) in audit.column_ranges.items()
        },
    }
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")
