"""Recurrent relation classifiers: uni-directional, bi-directional, and the
connectionist bi-directional variant.

Inputs are trigrams: step t concatenates the feature vectors of tokens
t-1, t, t+1. Three recurrences share the capped-ReLU activation f:

    forward   h_f[t] = f(U_f @ w[t] + V @ h_f[t-1])        t = 1..n
    backward  h_b[t] = f(U_b @ w[t] + B @ h_b[t+1])        t = n..1
    combined  h_c[t] = f(h_b[t] + h_f[t] + H @ h_c[t-1])   t = 1..n

so h_b[t] summarizes the words from t to the end (the backward recurrence
consumes the reversed sentence), and the combined layer folds every
intermediate state into the final decision through H. Scoring always reads
the state at t = n: h_f[n] (uni), f(h_b[n] + h_f[n]) (bi), h_c[n]
(connectionist). Initial states are zero and untrained. Training is full
unrolled backpropagation through time; an optional truncation window limits
how many recurrence hops gradients travel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import LabeledSentence, RelationLabel, Vocabulary, id_to_label
from .embeddings import init_position_embeddings, init_word_embeddings
from .features import (
    PositionFeatureConfig,
    RnnExample,
    assemble_token_vectors,
    prepare_rnn_example,
    rnn_input_grads,
    trigram_grads_to_vectors,
    trigram_sequence,
)
from .kernels import capped_relu_backward, capped_relu_forward
from .objectives import decode_scores, n_scores

WEIGHT_INIT_SCALE = 0.1

VARIANTS = ("uni", "bi", "connectionist")


@dataclass(frozen=True)
class RnnConfig:
    variant: str = "connectionist"
    pos_variant: str = "indicators"   # none | embeddings | embeddings_plus_entity_flag | indicators
    pos_dim: int = 5
    pos_clip: int = 30
    word_dim: int = 50
    hidden: int = 400
    objective: str = "ranking"
    relu_cap: float = 1.0
    truncation: Optional[int] = None  # max BPTT hops per chain; None = full unroll

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown RNN variant {self.variant!r}")
        if self.hidden < 1 or self.word_dim < 1:
            raise ValueError("hidden and word_dim must be positive")
        if self.relu_cap <= 0:
            raise ValueError("relu_cap must be positive")
        self.pos_config

    @property
    def pos_config(self) -> PositionFeatureConfig:
        return PositionFeatureConfig(self.pos_variant, self.pos_dim, self.pos_clip)

    @property
    def input_width(self) -> int:
        return 3 * self.pos_config.token_feature_width(self.word_dim)


def init_rnn_params(
    config: RnnConfig,
    vocab: Vocabulary,
    rng: np.random.Generator,
    pretrained: Optional[dict] = None,
) -> dict:
    params = {"emb_word": init_word_embeddings(vocab, config.word_dim, rng, pretrained)}
    pos = config.pos_config
    if pos.uses_distance_embeddings:
        params["emb_pos1"] = init_position_embeddings(pos.n_buckets, pos.pos_dim, rng)
        params["emb_pos2"] = init_position_embeddings(pos.n_buckets, pos.pos_dim, rng)
    h, width = config.hidden, config.input_width

    def uniform(shape):
        return rng.uniform(-WEIGHT_INIT_SCALE, WEIGHT_INIT_SCALE, size=shape)

    params["U_f"] = uniform((h, width))
    params["V_rec"] = uniform((h, h))
    if config.variant in ("bi", "connectionist"):
        params["U_b"] = uniform((h, width))
        params["B_rec"] = uniform((h, h))
    if config.variant == "connectionist":
        params["H_rec"] = uniform((h, h))
    params["W_score"] = uniform((n_scores(config.objective), h))
    params["b_score"] = np.zeros(n_scores(config.objective))
    return params


def rnn_param_spec(config: RnnConfig, vocab_size: int) -> dict:
    spec = {"emb_word": {"l2": False, "frozen_rows": (0,)}}
    pos = config.pos_config
    if pos.uses_distance_embeddings:
        spec["emb_pos1"] = {"l2": False, "frozen_rows": (pos.pad_bucket,)}
        spec["emb_pos2"] = {"l2": False, "frozen_rows": (pos.pad_bucket,)}
    for name in ("U_f", "V_rec", "U_b", "B_rec", "H_rec", "W_score"):
        spec[name] = {"l2": True}
    spec["b_score"] = {"l2": False}
    return spec


def prepare_example(
    sentence: LabeledSentence, vocab: Vocabulary, config: RnnConfig
) -> RnnExample:
    return prepare_rnn_example(sentence, vocab, config.pos_config)


@dataclass
class RnnCache:
    example: RnnExample
    config: RnnConfig
    trigrams: np.ndarray            # (n, 3*tau)
    pre_f: np.ndarray               # (n+1, h); row 0 unused
    h_f: np.ndarray                 # (n+1, h); h_f[0] = 0
    pre_b: Optional[np.ndarray]     # (n+2, h); rows 0 and n+1 unused
    h_b: Optional[np.ndarray]       # (n+2, h); h_b[n+1] = 0
    pre_c: Optional[np.ndarray]
    h_c: Optional[np.ndarray]       # (n+1, h); h_c[0] = 0
    pre_out: Optional[np.ndarray]   # bi only: pre-activation of the scored state
    scored_state: np.ndarray
    params: dict


def rnn_forward(example: RnnExample, params: dict, config: RnnConfig):
    """Run the configured recurrences over the trigram sequence; returns
    (scores, cache). The sequence must be non-empty."""
    if example.tok.shape[0] == 0:
        raise ValueError("cannot run the RNN on an empty sentence")
    pos = config.pos_config
    vectors = assemble_token_vectors(
        example,
        params["emb_word"],
        params.get("emb_pos1") if pos.uses_distance_embeddings else None,
        params.get("emb_pos2") if pos.uses_distance_embeddings else None,
    )
    trigrams = trigram_sequence(vectors)
    n = trigrams.shape[0]
    h = config.hidden
    cap = config.relu_cap
    u_f, v_rec = params["U_f"], params["V_rec"]

    pre_f = np.zeros((n + 1, h))
    h_f = np.zeros((n + 1, h))
    for t in range(1, n + 1):
        pre_f[t] = u_f @ trigrams[t - 1] + v_rec @ h_f[t - 1]
        h_f[t] = capped_relu_forward(pre_f[t], cap)

    pre_b = h_b = pre_c = h_c = pre_out = None
    if config.variant in ("bi", "connectionist"):
        u_b, b_rec = params["U_b"], params["B_rec"]
        pre_b = np.zeros((n + 2, h))
        h_b = np.zeros((n + 2, h))
        for t in range(n, 0, -1):
            pre_b[t] = u_b @ trigrams[t - 1] + b_rec @ h_b[t + 1]
            h_b[t] = capped_relu_forward(pre_b[t], cap)

    if config.variant == "uni":
        scored = h_f[n]
    elif config.variant == "bi":
        pre_out = h_b[n] + h_f[n]
        scored = capped_relu_forward(pre_out, cap)
    else:
        h_rec = params["H_rec"]
        pre_c = np.zeros((n + 1, h))
        h_c = np.zeros((n + 1, h))
        for t in range(1, n + 1):
            pre_c[t] = (h_b[t] + h_f[t]) + h_rec @ h_c[t - 1]
            h_c[t] = capped_relu_forward(pre_c[t], cap)
        scored = h_c[n]

    scores = params["W_score"] @ scored + params["b_score"]
    cache = RnnCache(
        example, config, trigrams, pre_f, h_f, pre_b, h_b, pre_c, h_c,
        pre_out, scored, params,
    )
    return scores, cache


def rnn_backward(cache: RnnCache, dscores: np.ndarray) -> dict:
    """Full-sequence BPTT through all active recurrences jointly. The caller
    is responsible for gradient clipping."""
    config = cache.config
    params = cache.params
    n = cache.trigrams.shape[0]
    h = config.hidden
    cap = config.relu_cap
    n_out = params["W_score"].shape[0]
    dscores = np.asarray(dscores, dtype=np.float64)
    if dscores.shape != (n_out,):
        raise ValueError(f"dscores shape {dscores.shape} does not match cache ({n_out})")
    trunc = config.truncation
    grads = {
        "W_score": np.multiply.outer(dscores, cache.scored_state),
        "b_score": dscores.copy(),
    }
    dscored = params["W_score"].T @ dscores

    dh_f = np.zeros((n + 1, h))
    dh_b = np.zeros((n + 2, h)) if cache.h_b is not None else None

    if config.variant == "uni":
        dh_f[n] = dscored
    elif config.variant == "bi":
        dpre = capped_relu_backward(dscored, cache.pre_out, cap)
        dh_f[n] += dpre
        dh_b[n] += dpre
    else:
        h_rec = params["H_rec"]
        g_h = np.zeros_like(h_rec)
        dh_c = np.zeros((n + 1, h))
        dh_c[n] = dscored
        for t in range(n, 0, -1):
            dpre = capped_relu_backward(dh_c[t], cache.pre_c[t], cap)
            g_h += np.multiply.outer(dpre, cache.h_c[t - 1])
            if trunc is None or (n - (t - 1)) <= trunc:
                dh_c[t - 1] += h_rec.T @ dpre
            dh_f[t] += dpre
            dh_b[t] += dpre
        grads["H_rec"] = g_h

    dtrigrams = np.zeros_like(cache.trigrams)

    u_f, v_rec = params["U_f"], params["V_rec"]
    g_uf = np.zeros_like(u_f)
    g_v = np.zeros_like(v_rec)
    for t in range(n, 0, -1):
        dpre = capped_relu_backward(dh_f[t], cache.pre_f[t], cap)
        g_uf += np.multiply.outer(dpre, cache.trigrams[t - 1])
        g_v += np.multiply.outer(dpre, cache.h_f[t - 1])
        if trunc is None or (n - (t - 1)) <= trunc:
            dh_f[t - 1] += v_rec.T @ dpre
        dtrigrams[t - 1] += u_f.T @ dpre
    grads["U_f"] = g_uf
    grads["V_rec"] = g_v

    if cache.h_b is not None:
        u_b, b_rec = params["U_b"], params["B_rec"]
        g_ub = np.zeros_like(u_b)
        g_b = np.zeros_like(b_rec)
        for t in range(1, n + 1):
            dpre = capped_relu_backward(dh_b[t], cache.pre_b[t], cap)
            g_ub += np.multiply.outer(dpre, cache.trigrams[t - 1])
            g_b += np.multiply.outer(dpre, cache.h_b[t + 1])
            if trunc is None or t <= trunc:
                dh_b[t + 1] += b_rec.T @ dpre
            dtrigrams[t - 1] += u_b.T @ dpre
        grads["U_b"] = g_ub
        grads["B_rec"] = g_b

    dvectors = trigram_grads_to_vectors(dtrigrams)
    dword, dpos1, dpos2 = rnn_input_grads(
        dvectors, cache.example, config.word_dim, config.pos_dim
    )
    grads["emb_word"] = dword
    if config.pos_config.uses_distance_embeddings:
        grads["emb_pos1"] = dpos1
        grads["emb_pos2"] = dpos2
    return grads


def rnn_predict(scores: np.ndarray, config: RnnConfig) -> RelationLabel:
    return id_to_label(decode_scores(scores, config.objective))
