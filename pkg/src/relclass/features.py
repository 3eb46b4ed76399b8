"""Model input encoding: context splits, position features, trigram inputs.

A sentence is turned into model inputs in two steps so training loops can
cache the static part: ``prepare_*`` computes index arrays once (token ids,
distance buckets, flags), ``assemble_*`` gathers the current embedding rows
into matrices on every forward pass (the tables change between updates).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import INDICATOR_TOKENS, LabeledSentence, Vocabulary, label_to_id

VARIANTS = ("none", "embeddings", "embeddings_plus_entity_flag", "indicators")


@dataclass(frozen=True)
class PositionFeatureConfig:
    """How entity-position information enters the model input."""

    variant: str = "embeddings"
    pos_dim: int = 5
    clip: int = 30  # distances beyond +-clip share the extreme bucket

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown position variant {self.variant!r}")
        if self.variant not in ("indicators", "none") and self.pos_dim <= 0:
            raise ValueError("pos_dim must be positive for embedding variants")
        if self.clip <= 0:
            raise ValueError("clip must be positive")

    @property
    def n_buckets(self) -> int:
        # signed distances -clip..+clip, plus one bucket for PADDING columns
        return 2 * self.clip + 2

    @property
    def pad_bucket(self) -> int:
        return self.n_buckets - 1

    def bucket(self, distance: int) -> int:
        d = max(-self.clip, min(self.clip, distance))
        return d + self.clip

    @property
    def uses_distance_embeddings(self) -> bool:
        return self.variant in ("embeddings", "embeddings_plus_entity_flag")

    def token_feature_width(self, word_dim: int) -> int:
        width = word_dim
        if self.uses_distance_embeddings:
            width += 2 * self.pos_dim
        if self.variant == "embeddings_plus_entity_flag":
            width += 1
        return width


@dataclass
class ContextViews:
    """The left/e1/middle/e2/right partition plus the two extended contexts.

    All fields are lists of token positions into the original sentence; the
    five plain regions concatenate back to range(len(tokens)) exactly.
    """

    left: list
    e1: list
    middle: list
    e2: list
    right: list

    @property
    def extended_1(self) -> list:
        return self.left + self.e1 + self.middle

    @property
    def extended_2(self) -> list:
        return self.middle + self.e2 + self.right


def split_contexts(sentence: LabeledSentence) -> ContextViews:
    (a1, b1), (a2, b2) = sentence.e1_span, sentence.e2_span
    n = len(sentence.tokens)
    return ContextViews(
        left=list(range(0, a1)),
        e1=list(range(a1, b1 + 1)),
        middle=list(range(b1 + 1, a2)),
        e2=list(range(a2, b2 + 1)),
        right=list(range(b2 + 1, n)),
    )


def relative_positions(sentence: LabeledSentence, clip: int) -> list:
    """Per-token (d1, d2): signed clipped distance to the nearest token of
    each entity span, 0 inside the span."""
    if clip <= 0:
        raise ValueError("clip must be positive")

    def dist(t, span):
        a, b = span
        if t < a:
            d = t - a
        elif t > b:
            d = t - b
        else:
            d = 0
        return max(-clip, min(clip, d))

    return [
        (dist(t, sentence.e1_span), dist(t, sentence.e2_span))
        for t in range(len(sentence.tokens))
    ]


def insert_position_indicators(sentence: LabeledSentence) -> list:
    """Token list with <e1>...</e1>, <e2>...</e2> inserted around the spans."""
    (a1, b1), (a2, b2) = sentence.e1_span, sentence.e2_span
    toks = sentence.tokens
    return (
        toks[:a1]
        + [INDICATOR_TOKENS[0]]
        + toks[a1 : b1 + 1]
        + [INDICATOR_TOKENS[1]]
        + toks[b1 + 1 : a2]
        + [INDICATOR_TOKENS[2]]
        + toks[a2 : b2 + 1]
        + [INDICATOR_TOKENS[3]]
        + toks[b2 + 1 :]
    )


def remove_position_indicators(tokens: list) -> list:
    return [t for t in tokens if t not in INDICATOR_TOKENS]


def entity_flags(sentence: LabeledSentence) -> np.ndarray:
    """1 for tokens inside either entity span, 0 elsewhere."""
    flags = np.zeros(len(sentence.tokens), dtype=np.float64)
    for a, b in (sentence.e1_span, sentence.e2_span):
        flags[a : b + 1] = 1.0
    return flags


# ---------------------------------------------------------------------------
# CNN encoding


@dataclass
class CnnStackEncoding:
    tok: np.ndarray            # token ids incl. (max_window-1) pads per side
    p1: Optional[np.ndarray]   # distance-to-e1 buckets, aligned with tok
    p2: Optional[np.ndarray]


@dataclass
class CnnExample:
    sentence_id: int
    label_id: Optional[int]
    stacks: list


def _check_cnn_variant(pos_config: PositionFeatureConfig) -> None:
    if pos_config.variant not in ("none", "embeddings"):
        raise ValueError(
            "CNN input supports position variants 'none' and 'embeddings' only; "
            f"got {pos_config.variant!r}"
        )


def encode_cnn_context(
    sentence: LabeledSentence,
    context: list,
    vocab: Vocabulary,
    pos_config: PositionFeatureConfig,
    max_window: int,
) -> CnnStackEncoding:
    """Index arrays for one context: token ids plus distance buckets, with
    (max_window - 1) PADDING entries on each side."""
    _check_cnn_variant(pos_config)
    if max_window < 1:
        raise ValueError("max_window must be >= 1")
    n_pad = max_window - 1
    tok = np.full(len(context) + 2 * n_pad, vocab.pad_id, dtype=np.int64)
    for i, t in enumerate(context):
        tok[n_pad + i] = vocab.lookup(sentence.tokens[t])
    p1 = p2 = None
    if pos_config.uses_distance_embeddings:
        dists = relative_positions(sentence, pos_config.clip)
        p1 = np.full(tok.shape, pos_config.pad_bucket, dtype=np.int64)
        p2 = np.full(tok.shape, pos_config.pad_bucket, dtype=np.int64)
        for i, t in enumerate(context):
            d1, d2 = dists[t]
            p1[n_pad + i] = pos_config.bucket(d1)
            p2[n_pad + i] = pos_config.bucket(d2)
    return CnnStackEncoding(tok=tok, p1=p1, p2=p2)


def assemble_cnn_matrix(
    enc: CnnStackEncoding,
    word_table: np.ndarray,
    pos1_table: Optional[np.ndarray],
    pos2_table: Optional[np.ndarray],
) -> np.ndarray:
    """Column t = word embedding (+) position channels for entry t."""
    parts = [word_table[enc.tok].T]
    if enc.p1 is not None:
        parts.append(pos1_table[enc.p1].T)
        parts.append(pos2_table[enc.p2].T)
    return np.ascontiguousarray(np.concatenate(parts, axis=0))


def encode_cnn_input(
    sentence: LabeledSentence,
    context: list,
    vocab: Vocabulary,
    word_table: np.ndarray,
    pos1_table: Optional[np.ndarray],
    pos2_table: Optional[np.ndarray],
    pos_config: PositionFeatureConfig,
    max_window: int,
) -> np.ndarray:
    enc = encode_cnn_context(sentence, context, vocab, pos_config, max_window)
    return assemble_cnn_matrix(enc, word_table, pos1_table, pos2_table)


def cnn_input_grads(
    dx: np.ndarray, enc: CnnStackEncoding, word_dim: int
) -> tuple:
    """Scatter a d(input matrix) back to sparse per-row embedding gradients.

    Returns (word, pos1, pos2) dicts mapping row index -> gradient vector;
    pos dicts are empty when the encoding has no position channels.
    """
    dword, dpos1, dpos2 = {}, {}, {}
    for col in range(dx.shape[1]):
        _scatter(dword, int(enc.tok[col]), dx[:word_dim, col])
    if enc.p1 is not None:
        pos_dim = (dx.shape[0] - word_dim) // 2
        for col in range(dx.shape[1]):
            _scatter(dpos1, int(enc.p1[col]), dx[word_dim : word_dim + pos_dim, col])
            _scatter(dpos2, int(enc.p2[col]), dx[word_dim + pos_dim :, col])
    return dword, dpos1, dpos2


def _scatter(acc: dict, row: int, vec: np.ndarray) -> None:
    if row in acc:
        acc[row] = acc[row] + vec
    else:
        acc[row] = vec.copy()


# ---------------------------------------------------------------------------
# RNN encoding


@dataclass
class RnnExample:
    sentence_id: int
    label_id: Optional[int]
    tok: np.ndarray             # token ids (indicators already inserted if used)
    p1: Optional[np.ndarray]
    p2: Optional[np.ndarray]
    flags: Optional[np.ndarray]


def prepare_rnn_example(
    sentence: LabeledSentence, vocab: Vocabulary, pos_config: PositionFeatureConfig
) -> RnnExample:
    label_id = label_to_id(sentence.label) if sentence.label is not None else None
    if pos_config.variant == "indicators":
        missing = [t for t in INDICATOR_TOKENS if t not in vocab]
        if missing:
            raise ValueError(
                f"position indicators enabled but {missing} are not vocabulary "
                "members; build the vocabulary with include_indicators=True"
            )
        tokens = insert_position_indicators(sentence)
        tok = np.array([vocab.lookup(t) for t in tokens], dtype=np.int64)
        return RnnExample(sentence.id, label_id, tok, None, None, None)
    tok = np.array([vocab.lookup(t) for t in sentence.tokens], dtype=np.int64)
    p1 = p2 = flags = None
    if pos_config.uses_distance_embeddings:
        dists = relative_positions(sentence, pos_config.clip)
        p1 = np.array([pos_config.bucket(d1) for d1, _ in dists], dtype=np.int64)
        p2 = np.array([pos_config.bucket(d2) for _, d2 in dists], dtype=np.int64)
    if pos_config.variant == "embeddings_plus_entity_flag":
        flags = entity_flags(sentence)
    return RnnExample(sentence.id, label_id, tok, p1, p2, flags)


def assemble_token_vectors(
    example: RnnExample,
    word_table: np.ndarray,
    pos1_table: Optional[np.ndarray],
    pos2_table: Optional[np.ndarray],
) -> np.ndarray:
    """Per-token feature vectors, one row per position (n x tau)."""
    parts = [word_table[example.tok]]
    if example.p1 is not None:
        parts.append(pos1_table[example.p1])
        parts.append(pos2_table[example.p2])
    if example.flags is not None:
        parts.append(example.flags[:, None])
    return np.concatenate(parts, axis=1)


def trigram_sequence(vectors: np.ndarray) -> np.ndarray:
    """Step t concatenates the vectors of tokens t-1, t, t+1; PADDING vectors
    (all zeros: the PAD word row and pad position bucket are frozen at zero)
    fill in beyond the sentence ends."""
    n, tau = vectors.shape
    out = np.zeros((n, 3 * tau), dtype=np.float64)
    out[1:, :tau] = vectors[:-1]
    out[:, tau : 2 * tau] = vectors
    out[:-1, 2 * tau :] = vectors[1:]
    return out


def encode_rnn_input(
    sentence: LabeledSentence,
    vocab: Vocabulary,
    word_table: np.ndarray,
    pos1_table: Optional[np.ndarray],
    pos2_table: Optional[np.ndarray],
    pos_config: PositionFeatureConfig,
) -> np.ndarray:
    example = prepare_rnn_example(sentence, vocab, pos_config)
    return trigram_sequence(
        assemble_token_vectors(example, word_table, pos1_table, pos2_table)
    )


def trigram_grads_to_vectors(dtrigrams: np.ndarray) -> np.ndarray:
    """Fold trigram-row gradients back onto per-token vector gradients."""
    n, width = dtrigrams.shape
    tau = width // 3
    dv = dtrigrams[:, tau : 2 * tau].copy()
    dv[:-1] += dtrigrams[1:, :tau]
    dv[1:] += dtrigrams[:-1, 2 * tau :]
    return dv


def rnn_input_grads(
    dvectors: np.ndarray, example: RnnExample, word_dim: int, pos_dim: int
) -> tuple:
    """Sparse embedding gradients from per-token vector gradients; the flag
    channel is an input constant and contributes no parameter gradient."""
    dword, dpos1, dpos2 = {}, {}, {}
    for t in range(dvectors.shape[0]):
        _scatter(dword, int(example.tok[t]), dvectors[t, :word_dim])
    if example.p1 is not None:
        for t in range(dvectors.shape[0]):
            _scatter(dpos1, int(example.p1[t]), dvectors[t, word_dim : word_dim + pos_dim])
            _scatter(
                dpos2,
                int(example.p2[t]),
                dvectors[t, word_dim + pos_dim : word_dim + 2 * pos_dim],
            )
    return dword, dpos1, dpos2
