import numpy as np
import pytest

from relclass.cnn import CnnConfig
from relclass.corpus import build_vocabulary, parse_semeval_file
from relclass.rnn import RnnConfig
from relclass.training import (
    ModelAdapter,
    TrainConfig,
    TrainingDiverged,
    accumulate_grads,
    accuracy,
    corpus_objective,
    predict_examples,
    scale_grads,
    sgd_step,
    train,
)
from synth import make_corpus_text

TINY_CNN = CnnConfig(context_mode="extended", window_sizes=(2, 3), feature_maps=8,
                     word_dim=10, pos_variant="embeddings", pos_dim=3, pos_clip=10,
                     objective="ranking")
TINY_RNN = RnnConfig(variant="connectionist", pos_variant="indicators", word_dim=10,
                     hidden=12, objective="ranking")


def test_train_config_defaults_match_published_values():
    cnn = TrainConfig.cnn_defaults()
    assert (cnn.batch_size, cnn.learning_rate, cnn.epochs) == (25, 0.2, 10)
    assert cnn.l2_weight == 0.0001
    rnn = TrainConfig.rnn_defaults()
    assert (rnn.batch_size, rnn.learning_rate, rnn.epochs) == (1, 0.01, 50)
    assert rnn.clip_threshold == 10.0


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(schedule="linear")


def test_sgd_step_identity_cases():
    params = {"w": np.array([1.0, 2.0])}
    sgd_step(params, {"w": np.zeros(2)}, lr=0.1, l2_weight=0.0, param_spec={"w": {"l2": True}})
    assert np.array_equal(params["w"], [1.0, 2.0])


def test_sgd_step_lr_zero_changes_nothing():
    params = {"w": np.array([1.0, -2.0]), "e": np.arange(4.0).reshape(2, 2)}
    grads = {"w": np.array([5.0, 5.0]), "e": {1: np.ones(2)}}
    spec = {"w": {"l2": True}, "e": {"l2": False}}
    sgd_step(params, grads, lr=0.0, l2_weight=0.0001, param_spec=spec)
    assert np.array_equal(params["w"], [1.0, -2.0])
    assert np.array_equal(params["e"], np.arange(4.0).reshape(2, 2))


def test_sgd_step_l2_arithmetic():
    params = {"w": np.array([1.0])}
    sgd_step(params, {"w": np.zeros(1)}, lr=0.1, l2_weight=0.0001,
             param_spec={"w": {"l2": True}})
    assert params["w"][0] == pytest.approx(1.0 - 0.00001, abs=1e-15)


def test_sgd_step_l2_exclusions_and_frozen_rows():
    params = {"bias": np.array([1.0]), "emb": np.arange(6.0).reshape(3, 2)}
    grads = {"bias": np.zeros(1), "emb": {0: np.ones(2), 2: np.ones(2)}}
    spec = {"bias": {"l2": False}, "emb": {"l2": False, "frozen_rows": (0,)}}
    sgd_step(params, grads, lr=0.5, l2_weight=0.1, param_spec=spec)
    assert params["bias"][0] == 1.0                      # no l2, zero grad
    assert np.array_equal(params["emb"][0], [0.0, 1.0])  # frozen row untouched
    assert np.array_equal(params["emb"][2], [3.5, 4.5])  # sparse update applied


def test_accumulate_and_scale_grads():
    acc = {}
    accumulate_grads(acc, {"w": np.ones(2), "e": {1: np.ones(3)}})
    accumulate_grads(acc, {"w": np.ones(2), "e": {1: np.ones(3), 2: np.ones(3)}})
    scale_grads(acc, 0.5)
    assert np.array_equal(acc["w"], [1.0, 1.0])
    assert np.array_equal(acc["e"][1], np.ones(3))
    assert np.array_equal(acc["e"][2], 0.5 * np.ones(3))


def _tiny_run(config, train_cfg, n=20, seed=0):
    sentences = parse_semeval_file(make_corpus_text(n, seed=seed))
    vocab = build_vocabulary(
        sentences,
        include_indicators=isinstance(config, RnnConfig)
        and config.pos_variant == "indicators",
    )
    result = train(config, sentences, vocab, train_cfg)
    return sentences, vocab, result


def test_two_identical_runs_are_bit_identical():
    cfg = TrainConfig.cnn_defaults(epochs=2, seed=7)
    _, _, a = _tiny_run(TINY_CNN, cfg)
    _, _, b = _tiny_run(TINY_CNN, cfg)
    assert set(a.params) == set(b.params)
    for name in a.params:
        assert np.array_equal(a.params[name], b.params[name]), name


def test_loss_non_increasing_over_first_epoch_at_small_lr():
    sentences = parse_semeval_file(make_corpus_text(10, seed=4))
    vocab = build_vocabulary(sentences)
    cfg = TrainConfig.cnn_defaults(epochs=1, learning_rate=1e-3, seed=1)
    adapter = ModelAdapter(TINY_CNN)
    rng = np.random.default_rng(cfg.seed)
    params0 = adapter.init(vocab, rng)
    examples = [adapter.prepare(s, vocab) for s in sentences]
    before = corpus_objective(adapter, params0, examples, cfg)
    result = train(TINY_CNN, sentences, vocab, cfg)
    after = corpus_objective(adapter, result.params, examples, cfg)
    assert after <= before


def test_training_reduces_loss_and_reaches_high_accuracy():
    cfg = TrainConfig.cnn_defaults(epochs=12, seed=3, schedule="constant",
                                   learning_rate=0.1, batch_size=5)
    sentences, vocab, result = _tiny_run(TINY_CNN, cfg, n=30, seed=2)
    adapter = ModelAdapter(TINY_CNN)
    examples = [adapter.prepare(s, vocab) for s in sentences]
    assert accuracy(adapter, result.params, examples) >= 0.9
    losses = [rec["train_loss"] for rec in result.history]
    assert losses[-1] < losses[0]


def test_rnn_training_step_applies_clipping_without_error():
    cfg = TrainConfig.rnn_defaults(epochs=1, seed=0)
    sentences, vocab, result = _tiny_run(TINY_RNN, cfg, n=8, seed=5)
    assert len(result.history) == 1
    assert np.isfinite(result.history[0]["train_loss"])


def test_dev_f1_logged_and_schedule_halves_on_plateau():
    sentences = parse_semeval_file(make_corpus_text(30, seed=6))
    vocab = build_vocabulary(sentences)
    cfg = TrainConfig.cnn_defaults(epochs=4, seed=2, learning_rate=1e-4)
    result = train(TINY_CNN, sentences[:20], vocab, cfg, dev_sentences=sentences[20:])
    assert all("dev_f1" in rec for rec in result.history)
    lrs = [rec["lr"] for rec in result.history]
    # at this tiny lr dev F1 plateaus, so halving must have kicked in
    assert lrs[-1] < lrs[0]
    assert "final.dev_f1" in result.manifest


def test_objective_mismatch_rejected():
    sentences = parse_semeval_file(make_corpus_text(5, seed=0))
    vocab = build_vocabulary(sentences)
    cfg = TrainConfig(objective="softmax", epochs=1)
    with pytest.raises(ValueError, match="conflicts"):
        train(TINY_CNN, sentences, vocab, cfg)


def test_empty_corpus_rejected():
    with pytest.raises(ValueError, match="empty"):
        train(TINY_CNN, [], build_vocabulary([]), TrainConfig(epochs=1))


@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
@pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
def test_divergence_aborts_with_last_good_params():
    sentences = parse_semeval_file(make_corpus_text(10, seed=1))
    vocab = build_vocabulary(sentences)
    # an absurd learning rate makes the L2 update compound geometrically
    # (factor |1 - lr*l2| per step) until the weights overflow to inf
    cfg = TrainConfig.cnn_defaults(epochs=50, learning_rate=1e18, schedule="constant")
    with pytest.raises(TrainingDiverged) as info:
        train(TINY_CNN, sentences, vocab, cfg)
    assert info.value.history is not None


def test_training_on_other_only_pushes_scores_negative():
    # the ranking loss trains Other with just the competitor term, so a model
    # fit to Other-only data must drive every directed score below zero
    from relclass.cnn import cnn_forward, prepare_cnn_example
    from relclass.corpus import OTHER_ID, id_to_label
    from relclass.objectives import decode_scores

    sentences = parse_semeval_file(make_corpus_text(12, seed=8))
    for s in sentences:
        s.label = id_to_label(OTHER_ID)
    vocab = build_vocabulary(sentences)
    cfg = TrainConfig.cnn_defaults(epochs=15, seed=0, schedule="constant", batch_size=4)
    result = train(TINY_CNN, sentences, vocab, cfg)
    for s in sentences:
        example = prepare_cnn_example(s, vocab, TINY_CNN)
        scores, _ = cnn_forward(example, result.params, TINY_CNN)
        assert scores.max() < 0.0
        assert decode_scores(scores, "ranking") == OTHER_ID


def test_predict_examples_returns_labels_for_all_ids():
    cfg = TrainConfig.cnn_defaults(epochs=1, seed=0)
    sentences, vocab, result = _tiny_run(TINY_CNN, cfg, n=10, seed=3)
    adapter = ModelAdapter(TINY_CNN)
    examples = [adapter.prepare(s, vocab) for s in sentences]
    preds = predict_examples(adapter, result.params, examples)
    assert set(preds) == {s.id for s in sentences}
