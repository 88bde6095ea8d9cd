"""Text embedding extraction: tokenize, chunk, encode, pool.

Each species description becomes one row keyed by the species id.  Two
pooling styles are offered.  The "bert" style averages the final-layer
embeddings of the ordinary tokens, leaving out special markers like the
leading classifier token.  The "sbert" style follows the convention of
sentence-embedding checkpoints: an attention-weighted mean over every
final-layer position.  Descriptions longer than the model's context
window are split into full-width chunks whose vectors are averaged.
"""

from __future__ import annotations

import numpy as np

from .manifest import ManifestRow

POOLING = {
    "text-bert": "token-mean-excluding-specials",
    "text-sbert": "masked-token-mean",
}


def _special_frame(tokenizer) -> tuple[list[int], list[int]]:
    """The ids wrapped around a single sequence: ([CLS], [SEP]) style.

    Built from token ids rather than tokenizer helper methods, which
    differ between tokenizer implementations and library versions.
    """
    prefix = [tokenizer.cls_token_id] if tokenizer.cls_token_id is not None else []
    suffix = [tokenizer.sep_token_id] if tokenizer.sep_token_id is not None else []
    return prefix, suffix


def chunk_capacity(tokenizer, model) -> int:
    """How many ordinary tokens fit in one forward pass."""
    max_positions = int(getattr(model.config, "max_position_embeddings", 10**9))
    window = min(int(tokenizer.model_max_length), max_positions)
    prefix, suffix = _special_frame(tokenizer)
    capacity = window - len(prefix) - len(suffix)
    if capacity <= 0:
        raise ValueError(f"model context window of {window} leaves no room for tokens")
    return capacity


def embed_text(text: str, tokenizer, model, pooling: str) -> np.ndarray:
    """One description -> one pooled vector, chunk-averaged if over-long."""
    import torch

    token_ids = tokenizer(text, add_special_tokens=False)["input_ids"]
    if not token_ids:
        raise ValueError("text produced no tokens")
    capacity = chunk_capacity(tokenizer, model)
    prefix, suffix = _special_frame(tokenizer)
    chunks = [
        token_ids[start : start + capacity]
        for start in range(0, len(token_ids), capacity)
    ]
    pooled = []
    for chunk in chunks:
        with_specials = prefix + chunk + suffix
        ordinary = torch.zeros(len(with_specials), dtype=torch.bool)
        ordinary[len(prefix) : len(prefix) + len(chunk)] = True
        input_ids = torch.tensor([with_specials])
        attention_mask = torch.ones_like(input_ids)
        hidden = model(
            input_ids=input_ids, attention_mask=attention_mask
        ).last_hidden_state.squeeze(0)
        if pooling == "token-mean-excluding-specials":
            kept = hidden[ordinary]
        elif pooling == "masked-token-mean":
            kept = hidden
        else:
            raise ValueError(f"unknown pooling {pooling!r}")
        pooled.append(kept.mean(dim=0).numpy().astype(np.float64))
    return np.mean(pooled, axis=0)


def extract_text_rows(
    rows: tuple[ManifestRow, ...],
    tokenizer,
    model,
    pooling: str,
    warn,
) -> list[tuple[str, str, np.ndarray]]:
    """Embed every description, in manifest order, keyed by species id.

    An empty description cannot be encoded, so it becomes a zero vector
    and a warning rather than a hole in the output table.
    """
    dim = int(model.config.hidden_size)
    embedded: list[tuple[str, str, np.ndarray]] = []
    for row in rows:
        if row.content:
            try:
                vector = embed_text(row.content, tokenizer, model, pooling)
            except ValueError as exc:
                if "no tokens" not in str(exc):
                    raise
                warn(f"species {row.species_id}: {exc}, writing a zero vector")
                vector = np.zeros(dim)
        else:
            warn(f"species {row.species_id}: empty description, writing a zero vector")
            vector = np.zeros(dim)
        embedded.append((row.species_id, "", vector))
    return embedded
