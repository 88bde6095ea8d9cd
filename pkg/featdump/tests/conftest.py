"""Shared fixtures: local model checkpoints and synthetic WAV clips.

The tests never touch the network.  They build small randomly
initialized checkpoints of the real architectures (768 hidden units,
two layers) on disk once per session and point the lock file at them.
Everything the extractor does downstream of model loading, from
resampling to pooling to file writing, behaves identically to a run
with the published checkpoints.
"""

import json

import numpy as np
import pytest
from scipy.io import wavfile


@pytest.fixture(scope="session")
def checkpoints(tmp_path_factory):
    import torch
    import warnings
    from transformers import (
        ASTConfig,
        ASTFeatureExtractor,
        ASTModel,
        BertConfig,
        BertModel,
        BertTokenizerFast,
    )

    root = tmp_path_factory.mktemp("checkpoints")

    ast_dir = root / "ast"
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="At least one mel filter")
        extractor = ASTFeatureExtractor(max_length=256)
    extractor.save_pretrained(ast_dir)
    ast_config = ASTConfig(
        hidden_size=768,
        num_hidden_layers=2,
        num_attention_heads=12,
        intermediate_size=1024,
        max_length=256,
    )
    torch.manual_seed(0)
    ASTModel(ast_config).save_pretrained(ast_dir)

    bert_dir = root / "bert"
    bert_dir.mkdir()
    specials = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    letters = list("abcdefghijklmnopqrstuvwxyz0123456789'-")
    pieces = ["##" + c for c in letters]
    words = [
        "bird", "song", "call", "the", "a", "high", "low", "pitch", "trill",
        "whistle", "harsh", "soft", "repeated", "short", "long", "series",
        "notes", "rising", "falling", "buzz", "chirp", "tk", "vist", "zee",
    ]
    vocab = specials + letters + pieces + words
    (bert_dir / "vocab.txt").write_text("\n".join(vocab) + "\n")
    tokenizer = BertTokenizerFast(
        vocab_file=str(bert_dir / "vocab.txt"), model_max_length=32
    )
    tokenizer.save_pretrained(bert_dir)
    bert_config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=768,
        num_hidden_layers=2,
        num_attention_heads=12,
        intermediate_size=1024,
        max_position_embeddings=32,
    )
    torch.manual_seed(1)
    BertModel(bert_config).save_pretrained(bert_dir)

    return {"ast": ast_dir, "bert": bert_dir}


@pytest.fixture(scope="session")
def lock_file(checkpoints, tmp_path_factory):
    path = tmp_path_factory.mktemp("lock") / "models.lock.json"
    path.write_text(
        json.dumps(
            {
                "audio-ast": str(checkpoints["ast"]),
                "text-bert": str(checkpoints["bert"]),
                "text-sbert": str(checkpoints["bert"]),
            }
        )
    )
    return path


def write_tone(path, rate, seconds, frequency, *, stereo=False, dtype="int16", seed=0):
    """A sine-plus-noise clip, written in the requested WAV flavor."""
    rng = np.random.default_rng(seed)
    t = np.arange(int(rate * seconds)) / rate
    tone = 0.4 * np.sin(2 * np.pi * frequency * t) + 0.05 * rng.normal(size=t.size)
    if stereo:
        tone = np.stack([tone, 0.7 * tone], axis=1)
    if dtype == "int16":
        data = (tone * 32767).astype(np.int16)
    elif dtype == "float32":
        data = tone.astype(np.float32)
    elif dtype == "uint8":
        data = ((tone + 1.0) * 127.5).astype(np.uint8)
    else:
        raise ValueError(dtype)
    wavfile.write(path, rate, data)
    return path


@pytest.fixture(scope="session")
def wav_dir(tmp_path_factory):
    """Five decodable clips in assorted rates and layouts, plus one dud."""
    root = tmp_path_factory.mktemp("wavs")
    write_tone(root / "a.wav", 16000, 0.8, 2500, seed=1)
    write_tone(root / "b.wav", 22050, 1.0, 1200, stereo=True, seed=2)
    write_tone(root / "c.wav", 8000, 1.2, 700, seed=3)
    write_tone(root / "d.wav", 16000, 0.5, 4000, dtype="float32", seed=4)
    write_tone(root / "e.wav", 44100, 0.6, 900, dtype="uint8", seed=5)
    (root / "broken.wav").write_bytes(b"this is not audio at all")
    return root


def manifest_of(path, rows):
    """Write tab-separated (content, species) rows to a manifest file."""
    lines = [f"{content}\t{species}" for content, species in rows]
    path.write_text("\n".join(lines) + ("\n" if lines else ""))
    return path
