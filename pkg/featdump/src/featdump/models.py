"""Model resolution: the lock file and quiet loading of checkpoints.

The lock file is a small JSON object mapping each extraction mode to a
model identifier, either a hub id or a local checkpoint directory.  The
resolved identifier is recorded in the output file header, so embeddings
always carry the name of the model that produced them.
"""

from __future__ import annotations

import json
import warnings
from importlib import resources
from pathlib import Path

MODES = ("audio-ast", "text-bert", "text-sbert")

_DEFAULT_LOCK = "models.lock.json"


def default_lock_path() -> Path:
    """The lock file shipped with the package (published model ids)."""
    return Path(str(resources.files(__package__) / _DEFAULT_LOCK))


def read_lock(path: str | Path | None = None) -> dict[str, str]:
    """Parse a lock file into a mode -> model identifier mapping."""
    path = default_lock_path() if path is None else Path(path)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON in lock file ({exc})") from None
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: lock file must be a JSON object")
    lock: dict[str, str] = {}
    for mode, model in payload.items():
        if mode not in MODES:
            raise ValueError(
                f"{path}: unknown mode {mode!r}; expected one of {', '.join(MODES)}"
            )
        if not isinstance(model, str) or not model:
            raise ValueError(f"{path}: model for {mode!r} must be a non-empty string")
        lock[mode] = model
    return lock


def resolve_model(lock: dict[str, str], mode: str) -> str:
    if mode not in lock:
        raise ValueError(f"lock file has no model pinned for mode {mode!r}")
    return lock[mode]


def _quiet_transformers() -> None:
    # loading checkpoints is a implementation detail of a batch tool, so
    # progress bars and info-level logs stay out of the job's stderr
    from transformers.utils import logging as hf_logging

    hf_logging.set_verbosity_error()
    hf_logging.disable_progress_bar()


def load_audio_model(identifier: str):
    """Load the audio feature extractor and encoder from one checkpoint."""
    _quiet_transformers()
    import torch
    from transformers import AutoFeatureExtractor, AutoModel

    with warnings.catch_warnings():
        # the stock 16 kHz mel filterbank config trips a harmless library
        # warning about empty top filters on every load; it says nothing
        # about this input or output, so it is silenced here at the source
        warnings.filterwarnings(
            "ignore", message="At least one mel filter", category=UserWarning
        )
        extractor = AutoFeatureExtractor.from_pretrained(identifier)
    model = AutoModel.from_pretrained(identifier)
    model.eval()
    torch.set_grad_enabled(False)
    return extractor, model


def load_text_model(identifier: str):
    """Load the tokenizer and encoder from one checkpoint."""
    _quiet_transformers()
    import torch
    from transformers import AutoModel, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(identifier)
    model = AutoModel.from_pretrained(identifier)
    model.eval()
    torch.set_grad_enabled(False)
    return tokenizer, model
