"""Convolutional relation classifiers.

Covers the ablation ladder from the single-window middle-context baseline up
to the extended-context ranking model: the sentence is split on the two
entities, and in extended mode two overlapping contexts (left+e1+middle,
middle+e2+right) are processed by independent convolution/max-pooling
stacks so the duplicated middle segment gets extra attention. The pooled
outputs are concatenated, squashed with tanh and scored linearly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .corpus import LabeledSentence, RelationLabel, Vocabulary, id_to_label, label_to_id
from .embeddings import init_position_embeddings, init_word_embeddings
from .features import (
    CnnExample,
    PositionFeatureConfig,
    assemble_cnn_matrix,
    cnn_input_grads,
    encode_cnn_context,
    split_contexts,
)
from .objectives import decode_scores, n_scores

WEIGHT_INIT_SCALE = 0.1  # weight matrices and filters start uniform in +-0.1


@dataclass(frozen=True)
class CnnConfig:
    context_mode: str = "extended"          # "middle_only" | "extended"
    window_sizes: tuple = (2, 3, 4, 5)
    feature_maps: int = 300                 # per window size, per stack
    word_dim: int = 50
    pos_variant: str = "embeddings"         # "none" | "embeddings"
    pos_dim: int = 5
    pos_clip: int = 30
    objective: str = "ranking"              # "softmax" | "ranking"

    def __post_init__(self):
        if self.context_mode not in ("middle_only", "extended"):
            raise ValueError(f"unknown context mode {self.context_mode!r}")
        if not self.window_sizes or any(w < 1 for w in self.window_sizes):
            raise ValueError("window_sizes must be non-empty, each >= 1")
        if self.feature_maps < 1 or self.word_dim < 1:
            raise ValueError("feature_maps and word_dim must be positive")
        self.pos_config  # validates the variant/pos_dim combination

    @property
    def pos_config(self) -> PositionFeatureConfig:
        if self.pos_variant not in ("none", "embeddings"):
            raise ValueError(
                f"CNN supports position variants 'none' and 'embeddings', "
                f"got {self.pos_variant!r}"
            )
        return PositionFeatureConfig(self.pos_variant, self.pos_dim, self.pos_clip)

    @property
    def n_stacks(self) -> int:
        return 2 if self.context_mode == "extended" else 1

    @property
    def max_window(self) -> int:
        return max(self.window_sizes)

    @property
    def column_height(self) -> int:
        return self.pos_config.token_feature_width(self.word_dim)

    @property
    def representation_width(self) -> int:
        return len(self.window_sizes) * self.feature_maps * self.n_stacks


def filter_key(stack: int, window: int) -> str:
    return f"filters/s{stack}/w{window}"


def bias_key(stack: int, window: int) -> str:
    return f"bias/s{stack}/w{window}"


def init_cnn_params(
    config: CnnConfig,
    vocab: Vocabulary,
    rng: np.random.Generator,
    pretrained: Optional[dict] = None,
) -> dict:
    """All trainable tensors, drawn in a fixed order for seed determinism."""
    params = {"emb_word": init_word_embeddings(vocab, config.word_dim, rng, pretrained)}
    pos = config.pos_config
    if pos.uses_distance_embeddings:
        params["emb_pos1"] = init_position_embeddings(pos.n_buckets, pos.pos_dim, rng)
        params["emb_pos2"] = init_position_embeddings(pos.n_buckets, pos.pos_dim, rng)
    height = config.column_height
    for stack in range(config.n_stacks):
        for w in config.window_sizes:
            params[filter_key(stack, w)] = rng.uniform(
                -WEIGHT_INIT_SCALE, WEIGHT_INIT_SCALE, size=(config.feature_maps, height, w)
            )
            params[bias_key(stack, w)] = np.zeros(config.feature_maps)
    params["w_cls"] = rng.uniform(
        -WEIGHT_INIT_SCALE,
        WEIGHT_INIT_SCALE,
        size=(n_scores(config.objective), config.representation_width),
    )
    return params


def cnn_param_spec(config: CnnConfig, vocab_size: int) -> dict:
    """Per-tensor update policy: L2 covers weight matrices and filters only;
    PADDING rows/buckets are frozen at zero."""
    spec = {"emb_word": {"l2": False, "frozen_rows": (0,)}, "w_cls": {"l2": True}}
    pos = config.pos_config
    if pos.uses_distance_embeddings:
        frozen = (pos.pad_bucket,)
        spec["emb_pos1"] = {"l2": False, "frozen_rows": frozen}
        spec["emb_pos2"] = {"l2": False, "frozen_rows": frozen}
    for stack in range(config.n_stacks):
        for w in config.window_sizes:
            spec[filter_key(stack, w)] = {"l2": True}
            spec[bias_key(stack, w)] = {"l2": False}
    return spec


def prepare_cnn_example(
    sentence: LabeledSentence, vocab: Vocabulary, config: CnnConfig
) -> CnnExample:
    views = split_contexts(sentence)
    if config.context_mode == "middle_only":
        contexts = [views.middle]
    else:
        contexts = [views.extended_1, views.extended_2]
    stacks = [
        encode_cnn_context(sentence, ctx, vocab, config.pos_config, config.max_window)
        for ctx in contexts
    ]
    label_id = label_to_id(sentence.label) if sentence.label is not None else None
    return CnnExample(sentence.id, label_id, stacks)


@dataclass
class CnnCache:
    example: CnnExample
    config: CnnConfig
    inputs: list          # assembled matrix per stack
    argmaxes: list        # (stack, window) -> argmax indices, in pooled order
    t_outs: list          # matching output widths
    filters: list         # filter/bias tensors used, in pooled order
    representation: np.ndarray  # post-tanh pooled vector
    pooled: np.ndarray          # pre-tanh pooled vector
    w_cls: np.ndarray


def cnn_forward(example: CnnExample, params: dict, config: CnnConfig):
    """Score a prepared sentence; returns (scores, cache for backward)."""
    pos = config.pos_config
    pooled_parts = []
    inputs, argmaxes, t_outs, used_filters = [], [], [], []
    for stack, enc in enumerate(example.stacks):
        x = assemble_cnn_matrix(
            enc,
            params["emb_word"],
            params.get("emb_pos1") if pos.uses_distance_embeddings else None,
            params.get("emb_pos2") if pos.uses_distance_embeddings else None,
        )
        inputs.append(x)
        for w in config.window_sizes:
            filters = params[filter_key(stack, w)]
            bias = params[bias_key(stack, w)]
            fmap = kernels.conv_over_time(x, filters, bias)
            maxima, argmax = kernels.max_pool_over_time(fmap)
            pooled_parts.append(maxima)
            argmaxes.append(argmax)
            t_outs.append(fmap.shape[1])
            used_filters.append((filters, bias))
    pooled = np.concatenate(pooled_parts)
    representation = kernels.tanh_forward(pooled)
    scores = params["w_cls"] @ representation
    cache = CnnCache(
        example, config, inputs, argmaxes, t_outs, used_filters,
        representation, pooled, params["w_cls"],
    )
    return scores, cache


def cnn_backward(cache: CnnCache, dscores: np.ndarray) -> dict:
    """Gradients for every CnnParameters tensor, embeddings as sparse rows."""
    config = cache.config
    n_out = cache.w_cls.shape[0]
    if np.asarray(dscores).shape != (n_out,):
        raise ValueError(
            f"dscores shape {np.asarray(dscores).shape} does not match cache ({n_out} scores)"
        )
    grads = {"w_cls": np.multiply.outer(dscores, cache.representation)}
    drep = cache.w_cls.T @ dscores
    dpooled = kernels.tanh_backward(drep, cache.representation)
    maps = config.feature_maps
    word_dim = config.word_dim
    dword, dpos1, dpos2 = {}, {}, {}
    part = 0
    for stack, enc in enumerate(cache.example.stacks):
        x = cache.inputs[stack]
        dx = np.zeros_like(x)
        for wi, w in enumerate(config.window_sizes):
            idx = stack * len(config.window_sizes) + wi
            seg = dpooled[part : part + maps]
            part += maps
            dfmap = kernels.max_pool_backward(seg, cache.argmaxes[idx], cache.t_outs[idx])
            filters, _ = cache.filters[idx]
            dx_w, dfilters, dbias = kernels.conv_over_time_backward(dfmap, x, filters)
            dx += dx_w
            grads[filter_key(stack, w)] = dfilters
            grads[bias_key(stack, w)] = dbias
        dw, dp1, dp2 = cnn_input_grads(dx, enc, word_dim)
        _merge_sparse(dword, dw)
        _merge_sparse(dpos1, dp1)
        _merge_sparse(dpos2, dp2)
    grads["emb_word"] = dword
    if config.pos_config.uses_distance_embeddings:
        grads["emb_pos1"] = dpos1
        grads["emb_pos2"] = dpos2
    return grads


def _merge_sparse(acc: dict, extra: dict) -> None:
    for row, vec in extra.items():
        if row in acc:
            acc[row] = acc[row] + vec
        else:
            acc[row] = vec


def cnn_predict(scores: np.ndarray, config: CnnConfig) -> RelationLabel:
    return id_to_label(decode_scores(scores, config.objective))
