"""Attribute-table preprocessing and class-embedding construction.

Raw per-species attribute tables (numbers, strings, missing cells) become
normalized class-embedding tables through a fixed pipeline: drop columns
with too many missing cells, zero-fill the remaining gaps, label-encode
string columns, then min/max-scale every column to [0, 1].  Text-embedding
sources skip this pipeline entirely and are ingested as-is.

Also computes pairwise cosine-similarity matrices over a table's species,
for inspecting how separable a metadata source makes them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import ClassEmbedding, ClassEmbeddingTable

Cell = float | str | None  # None marks a missing value


@dataclass(frozen=True)
class RawAttributeTable:
    """A species-by-attribute grid of numbers, strings and missing cells."""

    species_ids: tuple[str, ...]
    column_names: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]

    def __post_init__(self):
        species = tuple(self.species_ids)
        columns = tuple(self.column_names)
        if len(set(species)) != len(species):
            dupes = sorted({s for s in species if species.count(s) > 1})
            raise ValueError(f"duplicate species ids: {', '.join(dupes)}")
        if len(set(columns)) != len(columns):
            dupes = sorted({c for c in columns if columns.count(c) > 1})
            raise ValueError(f"duplicate column names: {', '.join(dupes)}")
        if len(self.rows) != len(species):
            raise ValueError(
                f"{len(self.rows)} rows for {len(species)} species ids"
            )
        normalized_rows = []
        for species_id, row in zip(species, self.rows):
            if len(row) != len(columns):
                raise ValueError(
                    f"row for {species_id!r} has {len(row)} cells, "
                    f"expected {len(columns)}"
                )
            cells = []
            for name, cell in zip(columns, row):
                if cell is None or isinstance(cell, str):
                    cells.append(cell)
                elif isinstance(cell, bool):
                    raise ValueError(
                        f"cell ({species_id!r}, {name!r}) is a boolean; use 0/1"
                    )
                elif isinstance(cell, (int, float, np.integer, np.floating)):
                    value = float(cell)
                    if not np.isfinite(value):
                        raise ValueError(
                            f"cell ({species_id!r}, {name!r}) is non-finite"
                        )
                    cells.append(value)
                else:
                    raise ValueError(
                        f"cell ({species_id!r}, {name!r}) has unsupported type "
                        f"{type(cell).__name__}"
                    )
            normalized_rows.append(tuple(cells))
        object.__setattr__(self, "species_ids", species)
        object.__setattr__(self, "column_names", columns)
        object.__setattr__(self, "rows", tuple(normalized_rows))

    @property
    def n_species(self) -> int:
        return len(self.species_ids)

    @property
    def n_columns(self) -> int:
        return len(self.column_names)

    def column(self, index: int) -> list[Cell]:
        return [row[index] for row in self.rows]

    def missing_counts(self) -> list[int]:
        return [sum(1 for row in self.rows if row[j] is None) for j in range(self.n_columns)]


@dataclass(frozen=True)
class SimilarityMatrix:
    """Pairwise cosine similarities between a table's species."""

    species_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        n = len(self.species_ids)
        if values.shape != (n, n):
            raise ValueError(
                f"similarity matrix shape {values.shape} does not match "
                f"{n} species"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("similarity matrix contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "species_ids", tuple(self.species_ids))
        object.__setattr__(self, "values", values)


def drop_sparse_columns(table: RawAttributeTable, max_missing: int = 10) -> RawAttributeTable:
    """Keep only columns with at most ``max_missing`` missing cells.

    The threshold is strict in the other direction: a column with exactly
    ``max_missing`` gaps survives.  Column order and every retained cell
    are unchanged.
    """
    if max_missing < 0:
        raise ValueError(f"max_missing must be non-negative, got {max_missing}")
    counts = table.missing_counts()
    keep = [j for j in range(table.n_columns) if counts[j] <= max_missing]
    if not keep and table.n_columns:
        warnings.warn(
            f"all {table.n_columns} columns exceed {max_missing} missing values; "
            "returning an empty table",
            stacklevel=2,
        )
    return RawAttributeTable(
        species_ids=table.species_ids,
        column_names=tuple(table.column_names[j] for j in keep),
        rows=tuple(tuple(row[j] for j in keep) for row in table.rows),
    )


def impute_missing(table: RawAttributeTable) -> RawAttributeTable:
    """Fill gaps: 0 in numeric columns, the empty string in string columns.

    A column counts as a string column when any present cell is a string;
    columns that are entirely missing are treated as numeric.
    """
    is_string = [
        any(isinstance(cell, str) for cell in table.column(j))
        for j in range(table.n_columns)
    ]
    rows = tuple(
        tuple(
            ("" if is_string[j] else 0.0) if cell is None else cell
            for j, cell in enumerate(row)
        )
        for row in table.rows
    )
    return RawAttributeTable(table.species_ids, table.column_names, rows)


def encode_strings(
    table: RawAttributeTable,
) -> tuple[RawAttributeTable, dict[str, dict[str, int]]]:
    """Label-encode string columns; distinct values sort lexicographically to 0, 1, ...

    Returns the encoded table together with the per-column value-to-code
    mappings so the encoding can be audited.  Numeric columns pass through
    untouched; a column mixing strings and numbers is an error.
    """
    encodings: dict[str, dict[str, int]] = {}
    columns: list[list[Cell]] = []
    for j, name in enumerate(table.column_names):
        cells = table.column(j)
        if any(cell is None for cell in cells):
            raise ValueError(
                f"column {name!r} still has missing cells; impute before encoding"
            )
        string_cells = [c for c in cells if isinstance(c, str)]
        if not string_cells:
            columns.append(cells)
            continue
        if len(string_cells) != len(cells):
            raise ValueError(f"column {name!r} mixes string and numeric values")
        mapping = {value: code for code, value in enumerate(sorted(set(string_cells)))}
        encodings[name] = mapping
        columns.append([float(mapping[c]) for c in cells])
    rows = tuple(
        tuple(columns[j][i] for j in range(table.n_columns))
        for i in range(table.n_species)
    )
    return RawAttributeTable(table.species_ids, table.column_names, rows), encodings


def minmax_normalize(
    table: RawAttributeTable, source_name: str = "attributes"
) -> ClassEmbeddingTable:
    """Scale each column to [0, 1]; constant columns map to all zeros."""
    if table.n_columns == 0:
        raise ValueError("cannot build class embeddings from a table with no columns")
    if table.n_species == 0:
        raise ValueError("cannot build class embeddings from a table with no species")
    grid = np.empty((table.n_species, table.n_columns), dtype=np.float64)
    for i, row in enumerate(table.rows):
        for j, cell in enumerate(row):
            if not isinstance(cell, float):
                raise ValueError(
                    f"cell ({table.species_ids[i]!r}, {table.column_names[j]!r}) "
                    f"is not numeric; encode strings before normalizing"
                )
            grid[i, j] = cell
    lo = grid.min(axis=0)
    hi = grid.max(axis=0)
    span = hi - lo
    constant = span == 0.0
    span[constant] = 1.0  # avoid 0/0; constant columns are zeroed below
    scaled = (grid - lo) / span
    scaled[:, constant] = 0.0
    return ClassEmbeddingTable(
        source_name=source_name,
        entries=tuple(
            ClassEmbedding(species_id=species, vector=scaled[i])
            for i, species in enumerate(table.species_ids)
        ),
    )


def concat_tables(tables: Sequence[ClassEmbeddingTable]) -> ClassEmbeddingTable:
    """Concatenate per-species vectors across sources, in the given order."""
    if not tables:
        raise ValueError("no tables to concatenate")
    if len(tables) == 1:
        return tables[0]
    base = set(tables[0].species_ids)
    for other in tables[1:]:
        diff = base.symmetric_difference(other.species_ids)
        if diff:
            raise ValueError(
                f"tables {tables[0].source_name!r} and {other.source_name!r} cover "
                f"different species: {', '.join(sorted(diff))}"
            )
    entries = tuple(
        ClassEmbedding(
            species_id=species,
            vector=np.concatenate([t.vector_for(species) for t in tables]),
        )
        for species in tables[0].species_ids
    )
    return ClassEmbeddingTable(
        source_name="+".join(t.source_name for t in tables),
        entries=entries,
    )


def cosine_similarity_matrix(table: ClassEmbeddingTable) -> SimilarityMatrix:
    """Pairwise cosine similarities; pairs involving an all-zero vector get 0."""
    matrix = table.matrix()
    norms = np.linalg.norm(matrix, axis=1)
    zero = norms == 0.0
    if np.any(zero):
        offenders = [s for s, z in zip(table.species_ids, zero) if z]
        warnings.warn(
            f"all-zero class vectors for {', '.join(offenders)}; "
            "their similarities are defined as 0",
            stacklevel=2,
        )
    safe_norms = np.where(zero, 1.0, norms)
    values = (matrix @ matrix.T) / np.outer(safe_norms, safe_norms)
    values[zero, :] = 0.0
    values[:, zero] = 0.0
    np.clip(values, -1.0, 1.0, out=values)
    return SimilarityMatrix(species_ids=table.species_ids, values=values)


@dataclass(frozen=True)
class PreprocessAudit:
    """What the pipeline did to a table, for the audit file."""

    source_name: str
    excluded_columns: tuple[str, ...]
    dropped_columns: tuple[str, ...]
    label_encodings: Mapping[str, Mapping[str, int]]
    column_ranges: Mapping[str, tuple[float, float]]


def preprocess_attribute_table(
    table: RawAttributeTable,
    *,
    max_missing: int = 10,
    exclude_columns: Iterable[str] = (),
    source_name: str = "attributes",
) -> tuple[ClassEmbeddingTable, PreprocessAudit]:
    """Run the full pipeline: exclude, drop sparse, impute, encode, normalize.

    ``exclude_columns`` names identity or geography columns to remove
    before the missing-value threshold is applied; names not present in
    the table are ignored.  Returns the normalized table plus an audit of
    dropped columns, label encodings and pre-scaling column ranges.
    """
    excluded_set = set(exclude_columns)
    keep = [j for j, name in enumerate(table.column_names) if name not in excluded_set]
    excluded = tuple(name for name in table.column_names if name in excluded_set)
    trimmed = RawAttributeTable(
        species_ids=table.species_ids,
        column_names=tuple(table.column_names[j] for j in keep),
        rows=tuple(tuple(row[j] for j in keep) for row in table.rows),
    )
    dense = drop_sparse_columns(trimmed, max_missing=max_missing)
    dropped = tuple(
        name for name in trimmed.column_names if name not in set(dense.column_names)
    )
    filled = impute_missing(dense)
    encoded, encodings = encode_strings(filled)
    ranges = {
        name: (
            min(encoded.column(j)),  # type: ignore[type-var]
            max(encoded.column(j)),  # type: ignore[type-var]
        )
        for j, name in enumerate(encoded.column_names)
    }
    embeddings = minmax_normalize(encoded, source_name=source_name)
    return embeddings, PreprocessAudit(
        source_name=source_name,
        excluded_columns=excluded,
        dropped_columns=dropped,
        label_encodings=encodings,
        column_ranges=ranges,
    )
