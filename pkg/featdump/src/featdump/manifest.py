"""Input manifests: tab-separated rows of (audio path or text, species id).

One row per extraction target.  The first field is an audio file path in
audio mode and a free-text description in text modes; the second field is
the species id.  Blank lines and lines starting with ``#`` are skipped.
Text descriptions may be empty (the extractor then emits a zero vector
with a warning), but the species id never may.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class ManifestRow:
    """One manifest line: what to embed and which species it belongs to."""

    content: str
    species_id: str
    line: int


def read_manifest(path: str | Path) -> tuple[ManifestRow, ...]:
    path = Path(path)
    rows: list[ManifestRow] = []
    with open(path) as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ValueError(
                    f"{path}:{number}: expected 2 tab-separated fields "
                    f"(content, species id), got {len(fields)}"
                )
            content, species_id = fields[0].strip(), fields[1].strip()
            if not species_id:
                raise ValueError(f"{path}:{number}: empty species id")
            rows.append(ManifestRow(content=content, species_id=species_id, line=number))
    return tuple(rows)


def require_unique_species(rows: tuple[ManifestRow, ...], path: str | Path) -> None:
    """Text modes need exactly one description per species."""
    seen: dict[str, int] = {}
    for row in rows:
        if row.species_id in seen:
            raise ValueError(
                f"{path}:{row.line}: duplicate species {row.species_id!r} "
                f"(first seen on line {seen[row.species_id]})"
            )
        seen[row.species_id] = row.line


def require_paths(rows: tuple[ManifestRow, ...], path: str | Path) -> None:
    """Audio mode needs a non-empty path in every row."""
    for row in rows:
        if not row.content:
            raise ValueError(f"{path}:{row.line}: empty audio path")
