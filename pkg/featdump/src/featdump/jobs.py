"""Extraction jobs: the one structure the tool runs, start to finish.

A job names a mode, an input manifest, an output path, and optionally a
lock file overriding the packaged model pins.  Running it loads the
pinned model, embeds every manifest row in order, and writes one
embedding file whose header comment records the mode and model, so the
file is self-describing.  Audio jobs additionally write a failures file
next to the output when any input could not be decoded.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .audio import extract_audio_rows
from .embedfile import write_embedding_file
from .manifest import read_manifest, require_paths, require_unique_species
from .models import MODES, read_lock, resolve_model
from .text import POOLING, extract_text_rows


class ExtractionWarning(UserWarning):
    """Raised for recoverable input problems: skipped files, empty text."""


@dataclass(frozen=True)
class ExtractionJob:
    """What to embed, with which model, and where to put the result."""

    mode: str
    manifest_path: str | Path
    output_path: str | Path
    lock_path: str | Path | None = None
    sample_rate: int = 16_000

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(
                f"mode must be one of {', '.join(MODES)}, got {self.mode!r}"
            )
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")


@dataclass(frozen=True)
class JobResult:
    """What a finished job produced."""

    output_path: Path
    rows_written: int
    dim: int
    model: str
    failures: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    @property
    def failures_path(self) -> Path:
        return self.output_path.with_name(self.output_path.name + ".failures")


def _warn(message: str) -> None:
    warnings.warn(message, ExtractionWarning, stacklevel=2)


def run_job(job: ExtractionJob) -> JobResult:
    """Execute one extraction job and write its output file."""
    lock = read_lock(job.lock_path)
    identifier = resolve_model(lock, job.mode)
    rows = read_manifest(job.manifest_path)
    output_path = Path(job.output_path)

    if job.mode == "audio-ast":
        require_paths(rows, job.manifest_path)
        embedded, failures, dim, header = _run_audio(job, identifier, rows)
    else:
        require_unique_species(rows, job.manifest_path)
        embedded, failures, dim, header = _run_text(job, identifier, rows)

    written = write_embedding_file(output_path, dim, embedded, comments=[header])
    result = JobResult(
        output_path=output_path,
        rows_written=written,
        dim=dim,
        model=identifier,
        failures=tuple(failures),
    )
    _write_failures(result)
    return result


def _run_audio(job, identifier, rows):
    from .models import load_audio_model

    extractor, model = load_audio_model(identifier)
    if int(extractor.sampling_rate) != job.sample_rate:
        raise ValueError(
            f"model {identifier} expects {extractor.sampling_rate} Hz input "
            f"but the job targets {job.sample_rate} Hz"
        )
    embedded, failures = extract_audio_rows(
        rows, extractor, model, job.sample_rate, _warn
    )
    dim = int(model.config.hidden_size)
    header = (
        f"featdump mode={job.mode} model={identifier} "
        f"sample_rate={job.sample_rate} mel_bins={extractor.num_mel_bins} "
        f"max_frames={extractor.max_length}"
    )
    return embedded, failures, dim, header


def _run_text(job, identifier, rows):
    from .models import load_text_model
    from .text import chunk_capacity

    tokenizer, model = load_text_model(identifier)
    pooling = POOLING[job.mode]
    embedded = extract_text_rows(rows, tokenizer, model, pooling, _warn)
    dim = int(model.config.hidden_size)
    header = (
        f"featdump mode={job.mode} model={identifier} "
        f"pooling={pooling} chunk_tokens={chunk_capacity(tokenizer, model)}"
    )
    return embedded, [], dim, header


def _write_failures(result: JobResult) -> None:
    """Record skipped inputs next to the output; remove stale records."""
    path = result.failures_path
    if result.failures:
        with open(path, "w") as handle:
            for content, reason in result.failures:
                handle.write(f"{content}\t{reason}\n")
    elif path.exists():
        path.unlink()
