"""Trainable embedding tables and the pretrained-embedding text loader."""

from __future__ import annotations

from typing import Optional, TextIO

import numpy as np

from .corpus import Vocabulary

INIT_SCALE = 0.25  # random rows are uniform in [-INIT_SCALE, INIT_SCALE]


def init_word_embeddings(
    vocab: Vocabulary,
    dim: int,
    rng: np.random.Generator,
    pretrained: Optional[dict] = None,
) -> np.ndarray:
    """|vocab| x dim matrix; pretrained rows where available, random otherwise.

    The PADDING row is all zeros (and stays frozen during training). Rows are
    drawn in vocabulary-index order so the result is seed-deterministic.
    """
    table = np.empty((len(vocab), dim), dtype=np.float64)
    for idx, token in enumerate(vocab.id_to_token):
        vec = pretrained.get(token) if pretrained else None
        if vec is not None:
            if vec.shape != (dim,):
                raise ValueError(
                    f"pretrained vector for {token!r} has dim {vec.shape[0]}, expected {dim}"
                )
            table[idx] = vec
        else:
            table[idx] = rng.uniform(-INIT_SCALE, INIT_SCALE, size=dim)
    table[vocab.pad_id] = 0.0
    return table


def init_position_embeddings(
    n_buckets: int, pos_dim: int, rng: np.random.Generator
) -> np.ndarray:
    """Randomly initialized distance-bucket table; the padding bucket (last
    row) is zero and frozen like the PADDING word row."""
    table = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(n_buckets, pos_dim))
    table[-1] = 0.0
    return table


def load_text_embeddings(fh: TextIO):
    """Read a text embedding file: one token per line followed by its floats.

    An optional word2vec-style header line ("count dim") is auto-detected.
    Returns (dict token -> float64 vector, dim). First occurrence wins on
    duplicate tokens.
    """
    vectors = {}
    dim = None
    for lineno, line in enumerate(fh, start=1):
        parts = line.rstrip("\n").split()
        if not parts:
            continue
        if lineno == 1 and len(parts) == 2:
            try:
                int(parts[0]), int(parts[1])
                continue  # header line
            except ValueError:
                pass
        token, values = parts[0], parts[1:]
        if dim is None:
            dim = len(values)
            if dim == 0:
                raise ValueError(f"line {lineno}: no embedding values")
        elif len(values) != dim:
            raise ValueError(
                f"line {lineno}: expected {dim} values, got {len(values)}"
            )
        if token not in vectors:
            vectors[token] = np.asarray(values, dtype=np.float64)
    if dim is None:
        raise ValueError("embedding file is empty")
    return vectors, dim
