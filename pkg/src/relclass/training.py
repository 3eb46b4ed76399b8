"""Training loops: minibatch SGD with L2, gradient clipping for the RNN,
seeded shuffling, a dev-driven learning-rate schedule, and run manifests.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import cnn as cnn_mod
from . import rnn as rnn_mod
from .corpus import id_to_label
from .evaluation import macro_f1
from .kernels import clip_gradients
from .objectives import RankingLossConfig, decode_scores, example_loss


class TrainingDiverged(RuntimeError):
    """Raised when the loss goes non-finite; carries the last good params."""

    def __init__(self, message, last_good_params=None, history=None):
        super().__init__(message)
        self.last_good_params = last_good_params
        self.history = history or []


@dataclass(frozen=True)
class TrainConfig:
    objective: Optional[str] = None       # None: use the model config's objective
    l2_weight: float = 0.0001
    batch_size: int = 25
    learning_rate: float = 0.2
    epochs: int = 10
    clip_threshold: Optional[float] = None
    seed: int = 0
    schedule: str = "halve_on_plateau"    # or "constant"

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if self.learning_rate <= 0 or self.l2_weight < 0:
            raise ValueError("learning_rate must be > 0 and l2_weight >= 0")
        if self.clip_threshold is not None and self.clip_threshold <= 0:
            raise ValueError("clip_threshold must be positive")
        if self.schedule not in ("constant", "halve_on_plateau"):
            raise ValueError(f"unknown schedule {self.schedule!r}")

    @classmethod
    def cnn_defaults(cls, **overrides) -> "TrainConfig":
        base = dict(batch_size=25, learning_rate=0.2, epochs=10, clip_threshold=None)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def rnn_defaults(cls, **overrides) -> "TrainConfig":
        base = dict(batch_size=1, learning_rate=0.01, epochs=50, clip_threshold=10.0)
        base.update(overrides)
        return cls(**base)


class ModelAdapter:
    """Uniform view over the two model families for the training loop."""

    def __init__(self, model_config):
        if isinstance(model_config, cnn_mod.CnnConfig):
            self.family = "cnn"
            self._mod = cnn_mod
        elif isinstance(model_config, rnn_mod.RnnConfig):
            self.family = "rnn"
            self._mod = rnn_mod
        else:
            raise TypeError(f"unsupported model config {type(model_config)!r}")
        self.config = model_config

    def init(self, vocab, rng, pretrained=None):
        if self.family == "cnn":
            return cnn_mod.init_cnn_params(self.config, vocab, rng, pretrained)
        return rnn_mod.init_rnn_params(self.config, vocab, rng, pretrained)

    def prepare(self, sentence, vocab):
        if self.family == "cnn":
            return cnn_mod.prepare_cnn_example(sentence, vocab, self.config)
        return rnn_mod.prepare_example(sentence, vocab, self.config)

    def forward(self, example, params):
        if self.family == "cnn":
            return cnn_mod.cnn_forward(example, params, self.config)
        return rnn_mod.rnn_forward(example, params, self.config)

    def backward(self, cache, dscores):
        if self.family == "cnn":
            return cnn_mod.cnn_backward(cache, dscores)
        return rnn_mod.rnn_backward(cache, dscores)

    def param_spec(self, vocab):
        if self.family == "cnn":
            return cnn_mod.cnn_param_spec(self.config, len(vocab))
        return rnn_mod.rnn_param_spec(self.config, len(vocab))


def sgd_step(params: dict, grads: dict, lr: float, l2_weight: float, param_spec: dict):
    """theta <- theta - lr * (g + l2 * theta); L2 only where the spec marks
    it, sparse embedding rows updated individually with frozen rows skipped."""
    for name in sorted(grads):
        g = grads[name]
        entry = param_spec.get(name, {})
        if isinstance(g, dict):
            frozen = set(entry.get("frozen_rows", ()))
            table = params[name]
            for row in sorted(g):
                if row in frozen:
                    continue
                table[row] -= lr * g[row]
        else:
            l2 = l2_weight if entry.get("l2") else 0.0
            params[name] -= lr * (g + l2 * params[name])


def accumulate_grads(acc: dict, grads: dict) -> None:
    for name, g in grads.items():
        if isinstance(g, dict):
            slot = acc.setdefault(name, {})
            for row, vec in g.items():
                if row in slot:
                    slot[row] = slot[row] + vec
                else:
                    slot[row] = vec
        elif name in acc:
            acc[name] += g
        else:
            acc[name] = g.copy()


def scale_grads(acc: dict, factor: float) -> None:
    for name, g in acc.items():
        if isinstance(g, dict):
            for row in g:
                g[row] = g[row] * factor
        else:
            g *= factor


@dataclass
class TrainResult:
    params: dict
    history: list = field(default_factory=list)   # one dict per epoch
    manifest: dict = field(default_factory=dict)


def predict_examples(adapter: ModelAdapter, params: dict, examples: list) -> dict:
    """Decode every example; returns {sentence id: RelationLabel}."""
    out = {}
    for ex in examples:
        scores, _ = adapter.forward(ex, params)
        out[ex.sentence_id] = id_to_label(decode_scores(scores, adapter.config.objective))
    return out


def accuracy(adapter: ModelAdapter, params: dict, examples: list) -> float:
    correct = 0
    for ex in examples:
        scores, _ = adapter.forward(ex, params)
        if decode_scores(scores, adapter.config.objective) == ex.label_id:
            correct += 1
    return correct / len(examples)


def corpus_objective(adapter, params, examples, train_config, ranking=None) -> float:
    """Mean example loss plus the L2 penalty 0.5*l2*||theta||^2 over the
    penalized tensors (the quantity one SGD epoch descends)."""
    ranking = ranking or RankingLossConfig()
    total = 0.0
    for ex in examples:
        scores, _ = adapter.forward(ex, params)
        loss, _ = example_loss(scores, ex.label_id, adapter.config.objective, ranking)
        total += loss
    total /= len(examples)
    return total + _l2_penalty(adapter, params, train_config.l2_weight)


def _l2_penalty(adapter, params, l2_weight):
    spec = (
        cnn_mod.cnn_param_spec(adapter.config, 0)
        if adapter.family == "cnn"
        else rnn_mod.rnn_param_spec(adapter.config, 0)
    )
    total = 0.0
    for name, entry in spec.items():
        if entry.get("l2") and name in params:
            total += float(np.sum(params[name] ** 2))
    return 0.5 * l2_weight * total


def train(
    model_config,
    train_sentences: list,
    vocab,
    train_config: TrainConfig,
    dev_sentences: Optional[list] = None,
    pretrained: Optional[dict] = None,
    ranking: Optional[RankingLossConfig] = None,
    stop_at_train_accuracy: Optional[float] = None,
) -> TrainResult:
    """Seeded epoch loop: shuffle, batch, forward/loss/backward, clip (when
    configured), SGD step; logs dev macro-F1 per epoch and applies the
    learning-rate schedule. Raises TrainingDiverged on non-finite loss.
    """
    if not train_sentences:
        raise ValueError("training corpus is empty")
    adapter = ModelAdapter(model_config)
    if train_config.objective is not None and train_config.objective != model_config.objective:
        raise ValueError(
            f"train objective {train_config.objective!r} conflicts with model "
            f"objective {model_config.objective!r}"
        )
    ranking = ranking or RankingLossConfig()
    rng = np.random.default_rng(train_config.seed)
    params = adapter.init(vocab, rng, pretrained)
    spec = adapter.param_spec(vocab)
    examples = [adapter.prepare(s, vocab) for s in train_sentences]
    dev_examples = [adapter.prepare(s, vocab) for s in (dev_sentences or [])]
    dev_gold = {s.id: s.label for s in (dev_sentences or [])}

    lr = train_config.learning_rate
    best_dev = -1.0
    history = []
    last_good = None
    start = time.perf_counter()
    objective = adapter.config.objective
    for epoch in range(1, train_config.epochs + 1):
        order = rng.permutation(len(examples))
        epoch_loss = 0.0
        for lo in range(0, len(order), train_config.batch_size):
            batch = order[lo : lo + train_config.batch_size]
            acc = {}
            for idx in batch:
                ex = examples[int(idx)]
                scores, cache = adapter.forward(ex, params)
                loss, dscores = example_loss(scores, ex.label_id, objective, ranking)
                if not np.isfinite(loss):
                    raise TrainingDiverged(
                        f"non-finite loss at epoch {epoch}, sentence {ex.sentence_id}",
                        last_good_params=last_good,
                        history=history,
                    )
                epoch_loss += loss
                accumulate_grads(acc, adapter.backward(cache, dscores))
            if len(batch) > 1:
                scale_grads(acc, 1.0 / len(batch))
            if train_config.clip_threshold is not None:
                acc = clip_gradients(acc, train_config.clip_threshold)
            sgd_step(params, acc, lr, train_config.l2_weight, spec)
        record = {
            "epoch": epoch,
            "lr": lr,
            "train_loss": epoch_loss / len(examples),
        }
        if dev_examples:
            preds = predict_examples(adapter, params, dev_examples)
            record["dev_f1"] = macro_f1(dev_gold, preds).macro_f1
        if stop_at_train_accuracy is not None:
            record["train_accuracy"] = accuracy(adapter, params, examples)
        history.append(record)
        last_good = {k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in params.items()}
        if stop_at_train_accuracy is not None and record["train_accuracy"] >= stop_at_train_accuracy:
            break
        if (
            train_config.schedule == "halve_on_plateau"
            and dev_examples
            and record["dev_f1"] <= best_dev
        ):
            lr /= 2.0
        if dev_examples:
            best_dev = max(best_dev, record["dev_f1"])
    wall = time.perf_counter() - start

    manifest = build_manifest(adapter, train_config, vocab, history, wall)
    return TrainResult(params=params, history=history, manifest=manifest)


def build_manifest(adapter, train_config, vocab, history, wall_time) -> dict:
    from .kernels import backend_name

    manifest = {
        "format": "relclass-manifest-v1",
        "family": adapter.family,
        "backend": backend_name(),
        "vocab_size": len(vocab),
        "seed": train_config.seed,
    }
    for key, value in sorted(vars(adapter.config).items()):
        manifest[f"model.{key}"] = _fmt(value)
    for key, value in sorted(vars(train_config).items()):
        manifest[f"train.{key}"] = _fmt(value)
    for rec in history:
        tag = f"epoch_{rec['epoch']:03d}"
        manifest[f"{tag}.lr"] = _fmt(rec["lr"])
        manifest[f"{tag}.train_loss"] = _fmt(rec["train_loss"])
        if "dev_f1" in rec:
            manifest[f"{tag}.dev_f1"] = _fmt(rec["dev_f1"])
        if "train_accuracy" in rec:
            manifest[f"{tag}.train_accuracy"] = _fmt(rec["train_accuracy"])
    if history and "dev_f1" in history[-1]:
        manifest["final.dev_f1"] = _fmt(history[-1]["dev_f1"])
    manifest["wall_time_s"] = f"{wall_time:.3f}"
    return manifest


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    return str(value)


def manifest_to_text(manifest: dict) -> str:
    return "\n".join(f"{k} = {v}" for k, v in manifest.items()) + "\n"
