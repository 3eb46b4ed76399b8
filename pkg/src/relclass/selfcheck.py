"""End-to-end gradient checking on tiny random model instances.

Builds a toy instance of any ablation-ladder architecture (50-token
vocabulary, 8-dim embeddings, 16 hidden units, sentences of 3 to 8 tokens)
and runs the finite-difference harness over the full loss. Central
differences are meaningless within epsilon of a capped-ReLU kink or an
argmax switch (pooling / competitor selection), so instances are resampled
deterministically until every such quantity clears a safety margin; the
check itself is never loosened.
"""

from __future__ import annotations

import numpy as np

from .cnn import CnnConfig, bias_key, cnn_backward, cnn_forward, filter_key, prepare_cnn_example
from .corpus import (
    INDICATOR_TOKENS,
    OTHER_ID,
    PAD_TOKEN,
    UNK_TOKEN,
    LabeledSentence,
    Vocabulary,
    id_to_label,
)
from .features import assemble_cnn_matrix
from .kernels import GradCheckReport, conv_over_time, grad_check
from .objectives import RankingLossConfig, example_loss
from .rnn import RnnConfig, prepare_example, rnn_backward, rnn_forward

TOY_WORD_DIM = 8
TOY_HIDDEN = 16
TOY_POS_DIM = 3
TOY_MAPS = 4

# One entry per Table 1 / Table 2 architecture row.
CNN_ARCHS = {
    "cnn-baseline": dict(context_mode="middle_only", window_sizes=(3,),
                         pos_variant="none", objective="softmax"),
    "cnn-pos": dict(context_mode="middle_only", window_sizes=(3,),
                    pos_variant="embeddings", objective="softmax"),
    "cnn-multiwindow": dict(context_mode="middle_only", window_sizes=(2, 3, 4, 5),
                            pos_variant="embeddings", objective="softmax"),
    "cnn-ranking": dict(context_mode="middle_only", window_sizes=(2, 3, 4, 5),
                        pos_variant="embeddings", objective="ranking"),
    "er-cnn": dict(context_mode="extended", window_sizes=(2, 3, 4, 5),
                   pos_variant="embeddings", objective="ranking"),
    "er-cnn-wide": dict(context_mode="extended", window_sizes=(2, 3, 4, 5),
                        pos_variant="embeddings", objective="ranking", word_dim=10),
}

RNN_ARCHS = {
    "uni-rnn": dict(variant="uni", pos_variant="none", objective="softmax"),
    "uni-rnn-pos": dict(variant="uni", pos_variant="embeddings", objective="softmax"),
    "uni-rnn-pos-flag": dict(variant="uni", pos_variant="embeddings_plus_entity_flag",
                             objective="softmax"),
    "uni-rnn-indicators": dict(variant="uni", pos_variant="indicators", objective="softmax"),
    "bi-rnn": dict(variant="bi", pos_variant="indicators", objective="softmax"),
    "connectionist-rnn": dict(variant="connectionist", pos_variant="indicators",
                              objective="softmax"),
    "r-rnn": dict(variant="connectionist", pos_variant="indicators", objective="ranking"),
    "r-rnn-wide": dict(variant="connectionist", pos_variant="indicators",
                       objective="ranking", word_dim=10),
}

ALL_ARCHS = tuple(CNN_ARCHS) + tuple(RNN_ARCHS)


def toy_vocab() -> Vocabulary:
    fillers = [f"w{i:02d}" for i in range(44)]
    return Vocabulary([PAD_TOKEN, UNK_TOKEN, *INDICATOR_TOKENS] + fillers)


def make_arch_config(arch: str):
    """(family, model config) for a named architecture at toy size."""
    if arch in CNN_ARCHS:
        kwargs = dict(CNN_ARCHS[arch])
        kwargs.setdefault("word_dim", TOY_WORD_DIM)
        return "cnn", CnnConfig(feature_maps=TOY_MAPS, pos_dim=TOY_POS_DIM, **kwargs)
    if arch in RNN_ARCHS:
        kwargs = dict(RNN_ARCHS[arch])
        kwargs.setdefault("word_dim", TOY_WORD_DIM)
        return "rnn", RnnConfig(hidden=TOY_HIDDEN, pos_dim=TOY_POS_DIM, **kwargs)
    raise ValueError(f"unknown architecture {arch!r}; known: {', '.join(ALL_ARCHS)}")


def _random_sentence(rng: np.random.Generator, vocab: Vocabulary) -> LabeledSentence:
    words = [t for t in vocab.id_to_token if t.startswith("w")]
    n = int(rng.integers(3, 9))
    tokens = [words[int(rng.integers(len(words)))] for _ in range(n)]
    a, b = sorted(rng.choice(n, size=2, replace=False).tolist())
    label = id_to_label(int(rng.integers(0, OTHER_ID + 1)))
    return LabeledSentence(0, tokens, (a, a), (b, b), label)


def _top_gap(values: np.ndarray) -> float:
    if values.size < 2:
        return np.inf
    top2 = np.partition(values, -2)[-2:]
    return float(top2[1] - top2[0])


def _strict_top_gap(values: np.ndarray) -> float:
    """Gap between the max and the best strictly smaller entry.

    Exact ties with the max come from bit-identical windows (all-PADDING
    regions); they move in lockstep under any parameter perturbation and
    share the same gradient, so they cannot destabilize the argmax.
    """
    top = values.max()
    below = values[values < top]
    return float(top - below.max()) if below.size else np.inf


def _cnn_margin(example, params, config: CnnConfig) -> float:
    """Smallest pooling-argmax separation across all filter rows."""
    pos = config.pos_config
    margin = np.inf
    for stack, enc in enumerate(example.stacks):
        x = assemble_cnn_matrix(
            enc,
            params["emb_word"],
            params.get("emb_pos1") if pos.uses_distance_embeddings else None,
            params.get("emb_pos2") if pos.uses_distance_embeddings else None,
        )
        for w in config.window_sizes:
            fmap = conv_over_time(x, params[filter_key(stack, w)], params[bias_key(stack, w)])
            if fmap.shape[1] > 1:
                for row in fmap:
                    margin = min(margin, _strict_top_gap(row))
    return margin


def _rnn_margin(cache, cap: float) -> float:
    """Smallest distance of any active pre-activation to a ReLU kink.

    Entries that are exactly 0.0 are combination sums whose feeder units are
    all gated off; they sit on the kink but cannot move under an epsilon
    perturbation (the feeders clear their own margins), so they are exempt.
    """
    n = cache.trigrams.shape[0]
    pres = [cache.pre_f[1 : n + 1]]
    if cache.pre_b is not None:
        pres.append(cache.pre_b[1 : n + 1])
    if cache.pre_c is not None:
        pres.append(cache.pre_c[1 : n + 1])
    if cache.pre_out is not None:
        pres.append(cache.pre_out)
    margin = np.inf
    for pre in pres:
        nonzero = pre[pre != 0.0]
        if nonzero.size:
            margin = min(margin, float(np.min(np.abs(nonzero))))
        margin = min(margin, float(np.min(np.abs(pre - cap))))
    return margin


def _ranking_margin(scores: np.ndarray, gold_id: int) -> float:
    """Separation protecting the competitor argmax from switching."""
    if gold_id == OTHER_ID:
        return _top_gap(scores)
    masked = np.delete(scores, gold_id)
    return _top_gap(masked)


def build_check_instance(
    arch: str,
    seed: int,
    epsilon: float = 6e-4,
    attempts: int = 1000,
    safety: float = 3.0,
):
    """(loss_fn, params) for a margin-safe random instance of `arch`.

    loss_fn(params) -> (loss, grads) re-runs forward + loss + backward, so
    the finite-difference harness can probe it coordinate by coordinate.
    An instance is accepted when every kink margin exceeds `safety` times
    the perturbation radius: epsilon times the largest activation feeding a
    weight (perturbing one coordinate by epsilon can move a pre-activation
    or score by at most roughly that much).
    """
    family, config = make_arch_config(arch)
    vocab = toy_vocab()
    ranking = RankingLossConfig()
    for attempt in range(attempts):
        rng = np.random.default_rng([seed, attempt])
        sentence = _random_sentence(rng, vocab)
        if family == "cnn":
            example = prepare_cnn_example(sentence, vocab, config)
            from .cnn import init_cnn_params

            params = init_cnn_params(config, vocab, rng)
            scores, cache = cnn_forward(example, params, config)
            max_feed = max(float(np.abs(x).max()) for x in cache.inputs)
            safe = _cnn_margin(example, params, config) > safety * epsilon * max_feed
        else:
            example = prepare_example(sentence, vocab, config)
            from .rnn import init_rnn_params

            params = init_rnn_params(config, vocab, rng)
            scores, cache = rnn_forward(example, params, config)
            feeds = [np.abs(cache.trigrams).max(), np.abs(cache.h_f).max()]
            if cache.h_b is not None:
                feeds.append(np.abs(cache.h_b).max())
            if cache.h_c is not None:
                feeds.append(np.abs(cache.h_c).max())
            max_feed = max(float(f) for f in feeds)
            safe = _rnn_margin(cache, config.relu_cap) > safety * epsilon * max_feed
        if config.objective == "ranking":
            # score shifts are bounded by epsilon (b_score moves one-for-one)
            safe = safe and _ranking_margin(scores, example.label_id) > safety * epsilon
        if not safe:
            continue

        gold_id = example.label_id
        forward = cnn_forward if family == "cnn" else rnn_forward
        backward = cnn_backward if family == "cnn" else rnn_backward

        def loss_fn(p):
            s, c = forward(example, p, config)
            loss, dscores = example_loss(s, gold_id, config.objective, ranking)
            return loss, backward(c, dscores)

        def loss_only(p):
            s, _ = forward(example, p, config)
            return example_loss(s, gold_id, config.objective, ranking)[0]

        return loss_fn, loss_only, params
    raise RuntimeError(f"could not build a margin-safe instance for {arch} seed {seed}")


def run_gradcheck(
    arch: str,
    seed: int = 0,
    epsilon: float = 6e-4,
    tolerance: float = 1e-4,
    max_coords_per_param: int = 12,
) -> GradCheckReport:
    """Full-model finite-difference check on a toy instance.

    The default epsilon balances two float64 constraints: central-difference
    noise (~ulps of the loss, divided by 2*epsilon) must stay below the
    1e-12 absolute band the relative-error floor implies for near-zero
    gradients, while epsilon times the largest unit activation must stay
    below the instance's kink margins.
    """
    loss_fn, loss_only, params = build_check_instance(arch, seed, epsilon=epsilon)
    return grad_check(
        loss_fn,
        params,
        epsilon=epsilon,
        tolerance=tolerance,
        max_coords_per_param=max_coords_per_param,
        rng=np.random.default_rng(seed + 10_000),
        loss_only=loss_only,
    )
