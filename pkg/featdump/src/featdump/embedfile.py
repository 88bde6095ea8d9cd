"""Writer for the embedding file format shared with the classification engine.

The format is a CSV table with an optional block of ``#`` comment lines,
then a header row ``id,label,<dim>``, then one row per vector: the id,
a label (the species for acoustic rows, empty for class tables), and
``dim`` decimal floats.  Floats are written with ``repr`` so that parsing
the file recovers the exact values.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def write_embedding_file(
    path: str | Path,
    dim: int,
    rows: Iterable[tuple[str, str, np.ndarray]],
    comments: Sequence[str] = (),
) -> int:
    """Write ``(id, label, vector)`` rows; returns the number written.

    Every vector must have exactly ``dim`` entries.  Comment lines are
    emitted first, each prefixed with ``# `` unless already starting
    with ``#``.
    """
    if dim <= 0:
        raise ValueError(f"dim must be positive, got {dim}")
    path = Path(path)
    written = 0
    with open(path, "w", newline="") as handle:
        for comment in comments:
            text = comment if comment.startswith("#") else f"# {comment}"
            handle.write(text + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["id", "label", str(dim)])
        for row_id, label, vector in rows:
            values = np.asarray(vector, dtype=float)
            if values.shape != (dim,):
                raise ValueError(
                    f"vector for {row_id!r} has shape {values.shape}, "
                    f"expected ({dim},)"
                )
            if not np.all(np.isfinite(values)):
                raise ValueError(f"vector for {row_id!r} has non-finite entries")
            writer.writerow([row_id, label] + [repr(float(v)) for v in values])
            written += 1
    return written
