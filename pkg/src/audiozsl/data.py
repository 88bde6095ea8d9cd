"""Embedding containers shared across the library.

All vectors are stored as read-only float64 numpy arrays; every container
validates its own invariants at construction time and is immutable
afterwards, so instances are safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


def _as_readonly_vector(values, *, what: str) -> np.ndarray:
    vec = np.array(values, dtype=np.float64, copy=True)
    if vec.ndim != 1:
        raise ValueError(f"{what} must be one-dimensional, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"{what} contains non-finite entries")
    vec.setflags(write=False)
    return vec


@dataclass(frozen=True)
class AcousticEmbedding:
    """One fixed-length acoustic feature vector for a single audio sample."""

    sample_id: str
    species_id: str
    vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "vector",
            _as_readonly_vector(self.vector, what=f"acoustic embedding {self.sample_id!r}"),
        )

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


@dataclass(frozen=True)
class ClassEmbedding:
    """The metadata vector describing one species (the semantic side)."""

    species_id: str
    vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "vector",
            _as_readonly_vector(self.vector, what=f"class embedding {self.species_id!r}"),
        )

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


@dataclass(frozen=True)
class ClassEmbeddingTable:
    """A named collection of class embeddings, one per species.

    Species ids are unique within a table and every vector has the table's
    declared dimension.  Entry order is preserved as given, so tables built
    from the same inputs compare and serialize identically.
    """

    source_name: str
    entries: tuple[ClassEmbedding, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise ValueError(f"class table {self.source_name!r} has no entries")
        dim = entries[0].dim
        for entry in entries:
            if entry.dim != dim:
                raise ValueError(
                    f"class table {self.source_name!r}: vector length {entry.dim} for "
                    f"{entry.species_id!r} does not match table dimension {dim}"
                )
        index: dict[str, int] = {}
        for pos, entry in enumerate(entries):
            if entry.species_id in index:
                raise ValueError(
                    f"class table {self.source_name!r}: duplicate species {entry.species_id!r}"
                )
            index[entry.species_id] = pos
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_index", index)

    @property
    def class_dim(self) -> int:
        return self.entries[0].dim

    @property
    def species_ids(self) -> tuple[str, ...]:
        return tuple(entry.species_id for entry in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, species_id: str) -> bool:
        return species_id in self._index

    def vector_for(self, species_id: str) -> np.ndarray:
        try:
            return self.entries[self._index[species_id]].vector
        except KeyError:
            raise ValueError(
                f"class table {self.source_name!r} has no species {species_id!r}"
            ) from None

    def matrix(self) -> np.ndarray:
        """All vectors stacked in entry order, shape (n_species, class_dim)."""
        out = np.stack([entry.vector for entry in self.entries])
        out.setflags(write=False)
        return out

    def subset(self, species_ids: Iterable[str]) -> "ClassEmbeddingTable":
        """New table restricted to ``species_ids``, keeping this table's order."""
        wanted = set(species_ids)
        missing = sorted(wanted - set(self._index))
        if missing:
            raise ValueError(
                f"class table {self.source_name!r} is missing species: {', '.join(missing)}"
            )
        kept = tuple(e for e in self.entries if e.species_id in wanted)
        return ClassEmbeddingTable(source_name=self.source_name, entries=kept)


def stack_acoustic_vectors(samples: Sequence[AcousticEmbedding]) -> np.ndarray:
    """Stack sample vectors into an (n_samples, audio_dim) matrix.

    Raises if the samples disagree on dimension.
    """
    if not samples:
        raise ValueError("no acoustic embeddings given")
    dim = samples[0].dim
    for sample in samples:
        if sample.dim != dim:
            raise ValueError(
                f"acoustic embedding {sample.sample_id!r} has length {sample.dim}, "
                f"expected {dim}"
            )
    return np.stack([s.vector for s in samples])
