"""Manifest-driven extraction of pretrained audio and text embeddings.

featdump turns a manifest of audio files or species descriptions into an
embedding file that downstream zero-shot classification tooling can read
directly: a plain-text table with one 768-dimensional vector per row.
Model identifiers are pinned in a lock file and recorded into the output
header, so a rerun with the same lock reproduces the same vectors.
"""

from .embedfile import write_embedding_file
from .jobs import MODES, ExtractionJob, ExtractionWarning, JobResult, run_job
from .manifest import ManifestRow, read_manifest
from .models import default_lock_path, read_lock

__all__ = [
    "ExtractionJob",
    "ExtractionWarning",
    "JobResult",
    "MODES",
    "ManifestRow",
    "default_lock_path",
    "read_lock",
    "read_manifest",
    "run_job",
    "write_embedding_file",
]

__version__ = "0.1.0"
