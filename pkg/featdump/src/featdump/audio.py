"""Audio embedding extraction: decode, resample, encode, average over time.

Each audio file becomes one row: the recording is decoded from WAV,
mixed down to mono, resampled to the job's target rate, pushed through
the pretrained spectrogram-transformer encoder, and the final hidden
layer is averaged over all positions into a single vector.  Files that
cannot be decoded are skipped with a warning and reported in a failures
list so a batch never dies halfway through.
"""

from __future__ import annotations

import math
import warnings
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .manifest import ManifestRow


class AudioDecodeError(ValueError):
    """Raised internally when a manifest entry cannot become samples."""


def load_wav_mono(path: str | Path) -> tuple[int, np.ndarray]:
    """Decode a WAV file to float32 mono samples in [-1, 1]."""
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise AudioDecodeError("file not found") from None
    except (ValueError, OSError) as exc:
        raise AudioDecodeError(f"not decodable as WAV ({exc})") from None
    if data.size == 0:
        raise AudioDecodeError("file contains no samples")
    if np.issubdtype(data.dtype, np.floating):
        samples = data.astype(np.float32)
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float32) - 128.0) / 128.0
    elif np.issubdtype(data.dtype, np.integer):
        samples = data.astype(np.float32) / float(np.iinfo(data.dtype).max + 1)
    else:
        raise AudioDecodeError(f"unsupported sample dtype {data.dtype}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return int(rate), samples


def resample(samples: np.ndarray, rate: int, target_rate: int) -> np.ndarray:
    if rate == target_rate:
        return samples
    divisor = math.gcd(rate, target_rate)
    return resample_poly(samples, target_rate // divisor, rate // divisor).astype(
        np.float32
    )


def embed_waveform(samples: np.ndarray, rate: int, extractor, model) -> np.ndarray:
    """One waveform -> one time-averaged final-hidden-layer vector."""
    with warnings.catch_warnings():
        # same harmless mel filterbank warning as at load time; see models.py
        warnings.filterwarnings(
            "ignore", message="At least one mel filter", category=UserWarning
        )
        batch = extractor(samples, sampling_rate=rate, return_tensors="pt")
    output = model(**batch)
    vector = output.last_hidden_state.mean(dim=1).squeeze(0)
    return vector.numpy().astype(np.float64)


def extract_audio_rows(
    rows: tuple[ManifestRow, ...],
    extractor,
    model,
    target_rate: int,
    warn,
) -> tuple[list[tuple[str, str, np.ndarray]], list[tuple[str, str]]]:
    """Embed every decodable file, in manifest order.

    Returns the embedding rows and a list of (path, reason) failures.
    The row id is the path exactly as the manifest spells it, so listing
    the same file twice produces two identical rows.
    """
    embedded: list[tuple[str, str, np.ndarray]] = []
    failures: list[tuple[str, str]] = []
    cache: dict[str, np.ndarray] = {}
    for row in rows:
        if row.content in cache:
            embedded.append((row.content, row.species_id, cache[row.content]))
            continue
        try:
            rate, samples = load_wav_mono(row.content)
        except AudioDecodeError as exc:
            warn(f"skipping {row.content}: {exc}")
            failures.append((row.content, str(exc)))
            continue
        samples = resample(samples, rate, target_rate)
        vector = embed_waveform(samples, target_rate, extractor, model)
        cache[row.content] = vector
        embedded.append((row.content, row.species_id, vector))
    return embedded, failures
