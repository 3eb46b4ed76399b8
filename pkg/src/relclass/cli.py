"""Command-line entry points: train, predict, eval, ensemble, gradcheck.

Settings come from (highest precedence first) command-line flags, a flat
``key = value`` config file, a named preset, and built-in defaults that
match the published hyperparameters. Exit codes: 0 success, 1 usage,
2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .cnn import CnnConfig
from .corpus import ParseError, build_vocabulary, parse_semeval_file, split_train_dev
from .embeddings import load_text_embeddings
from .evaluation import (
    ensemble_vote,
    format_report,
    macro_f1,
    read_gold_file,
    read_predictions,
    significance_z_test,
    write_predictions,
)
from .rnn import RnnConfig
from .selfcheck import ALL_ARCHS, run_gradcheck
from .training import (
    ModelAdapter,
    TrainConfig,
    TrainingDiverged,
    manifest_to_text,
    predict_examples,
    train,
)

DATA_DIR_ENV = "RELCLASS_DATA_DIR"


class UsageError(ValueError):
    pass


def _cnn_ladder(row: int) -> dict:
    """Table 1 ablation ladder, row by row."""
    model = dict(context_mode="middle_only", window_sizes=(3,), feature_maps=1200,
                 word_dim=50, pos_variant="none", pos_dim=5, objective="softmax")
    if row >= 2:
        model["pos_variant"] = "embeddings"
    if row >= 3:
        model.update(window_sizes=(2, 3, 4, 5), feature_maps=300)
    if row >= 4:
        model["objective"] = "ranking"
    if row >= 5:
        model["context_mode"] = "extended"
    if row >= 6:
        model.update(word_dim=400, pos_dim=35)
    return model


def _rnn_ladder(row: int) -> dict:
    """Table 2 ablation ladder, row by row."""
    model = dict(variant="uni", pos_variant="none", pos_dim=5, word_dim=50,
                 hidden=400, objective="softmax")
    if row == 2:
        model["pos_variant"] = "embeddings"
    if row == 3:
        model["pos_variant"] = "embeddings_plus_entity_flag"
    if row >= 4:
        model["pos_variant"] = "indicators"
    if row >= 5:
        model["variant"] = "bi"
    if row >= 6:
        model["variant"] = "connectionist"
    if row >= 7:
        model["objective"] = "ranking"
    if row >= 8:
        model["word_dim"] = 400
    return model


PRESETS = {}
for _row in range(1, 7):
    PRESETS[f"table1-row{_row}"] = ("cnn", _cnn_ladder(_row))
for _row in range(1, 9):
    PRESETS[f"table2-row{_row}"] = ("rnn", _rnn_ladder(_row))
PRESETS["er-cnn"] = ("cnn", _cnn_ladder(6))
PRESETS["r-rnn"] = ("rnn", _rnn_ladder(8))
PRESETS["cnn"] = ("cnn", _cnn_ladder(5))   # 50-dim extended ranking CNN
PRESETS["rnn"] = ("rnn", _rnn_ladder(7))   # 50-dim connectionist ranking RNN

_MODEL_KEYS_CNN = ("context_mode", "window_sizes", "feature_maps", "word_dim",
                   "pos_variant", "pos_dim", "pos_clip", "objective")
_MODEL_KEYS_RNN = ("variant", "pos_variant", "pos_dim", "pos_clip", "word_dim",
                   "hidden", "objective", "relu_cap", "truncation")

_CONFIG_KEY_TYPES = {
    "arch": str, "train": str, "emb": str, "out": str,
    "dev_size": int, "seed": int, "epochs": int, "batch_size": int,
    "learning_rate": float, "l2_weight": float, "clip_threshold": float,
    "schedule": str, "include_pretrained_vocab": bool,
    "context_mode": str, "window_sizes": "int_tuple", "feature_maps": int,
    "word_dim": int, "pos_variant": str, "pos_dim": int, "pos_clip": int,
    "objective": str, "variant": str, "hidden": int, "relu_cap": float,
    "truncation": int,
}


def parse_config_file(path: str) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _CONFIG_KEY_TYPES:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _convert(key, raw)
    return values


def _convert(key: str, raw: str):
    kind = _CONFIG_KEY_TYPES[key]
    if kind == "int_tuple":
        return tuple(int(v) for v in raw.split(","))
    if kind is bool:
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise UsageError(f"config key {key!r}: expected a boolean, got {raw!r}")
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw


def resolve_data_path(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    base = os.environ.get(DATA_DIR_ENV)
    if base and (Path(base) / path).exists():
        return Path(base) / path
    raise FileNotFoundError(f"data file not found: {path}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relclass", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and write a checkpoint")
    p_train.add_argument("--arch", help=f"preset name ({', '.join(sorted(PRESETS))})")
    p_train.add_argument("--config", help="flat key=value config file")
    p_train.add_argument("--train", dest="train_path", help="SemEval training file")
    p_train.add_argument("--emb", help="pretrained embedding text file")
    p_train.add_argument("--out", help="output directory")
    p_train.add_argument("--dev-size", type=int, dest="dev_size")
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--batch-size", type=int, dest="batch_size")
    p_train.add_argument("--learning-rate", type=float, dest="learning_rate")
    p_train.add_argument("--l2-weight", type=float, dest="l2_weight")
    p_train.add_argument("--clip-threshold", type=float, dest="clip_threshold")
    p_train.add_argument("--schedule", choices=("constant", "halve_on_plateau"))
    p_train.add_argument("--include-pretrained-vocab", action="store_true", default=None,
                         dest="include_pretrained_vocab")
    p_train.add_argument("--word-dim", type=int, dest="word_dim")
    p_train.add_argument("--pos-dim", type=int, dest="pos_dim")
    p_train.add_argument("--pos-clip", type=int, dest="pos_clip")
    p_train.add_argument("--pos-variant", dest="pos_variant")
    p_train.add_argument("--objective", choices=("softmax", "ranking"))
    p_train.add_argument("--context-mode", dest="context_mode",
                         choices=("middle_only", "extended"))
    p_train.add_argument("--windows", dest="window_sizes",
                         type=lambda s: tuple(int(v) for v in s.split(",")))
    p_train.add_argument("--feature-maps", type=int, dest="feature_maps")
    p_train.add_argument("--variant", choices=("uni", "bi", "connectionist"))
    p_train.add_argument("--hidden", type=int)
    p_train.add_argument("--relu-cap", type=float, dest="relu_cap")
    p_train.add_argument("--truncation", type=int)
    p_train.add_argument("--list-presets", action="store_true")
    p_train.set_defaults(func=cmd_train)

    p_pred = sub.add_parser("predict", help="write predictions for a data file")
    p_pred.add_argument("--checkpoint", required=True)
    p_pred.add_argument("--data", required=True)
    p_pred.add_argument("--out", required=True)
    p_pred.set_defaults(func=cmd_predict)

    p_eval = sub.add_parser("eval", help="score prediction files against gold")
    p_eval.add_argument("--gold", required=True,
                        help="SemEval corpus file or id<TAB>label file")
    p_eval.add_argument("predictions", nargs="+",
                        help="prediction files; two files also get a z-test")
    p_eval.set_defaults(func=cmd_eval)

    p_ens = sub.add_parser("ensemble", help="majority-vote prediction files")
    p_ens.add_argument("predictions", nargs="+")
    p_ens.add_argument("--out", required=True)
    p_ens.add_argument("--seed", type=int, default=0)
    p_ens.set_defaults(func=cmd_ensemble)

    p_gc = sub.add_parser("gradcheck", help="finite-difference check a toy model")
    p_gc.add_argument("--arch", required=True,
                      help=f"one of: {', '.join(ALL_ARCHS)}")
    p_gc.add_argument("--seed", type=int, default=0)
    p_gc.add_argument("--epsilon", type=float, default=6e-4)
    p_gc.add_argument("--tolerance", type=float, default=1e-4)
    p_gc.set_defaults(func=cmd_gradcheck)
    return parser


def _setting(args, file_cfg: dict, preset: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in file_cfg:
        return file_cfg[key]
    if key in preset:
        return preset[key]
    return default


def cmd_train(args) -> int:
    if args.list_presets:
        for name in sorted(PRESETS):
            family, model = PRESETS[name]
            desc = ", ".join(f"{k}={v}" for k, v in sorted(model.items()))
            print(f"{name:<14} [{family}] {desc}")
        return 0
    file_cfg = parse_config_file(args.config) if args.config else {}
    arch = args.arch or file_cfg.get("arch")
    if not arch:
        raise UsageError("--arch is required (see --list-presets)")
    if arch not in PRESETS:
        raise UsageError(f"unknown preset {arch!r}; see --list-presets")
    family, preset_model = PRESETS[arch]

    train_path = _setting(args, file_cfg, {}, "train_path") or file_cfg.get("train")
    out_dir = _setting(args, file_cfg, {}, "out")
    if not train_path or not out_dir:
        raise UsageError("--train and --out are required")

    sentences = parse_semeval_file(resolve_data_path(train_path).read_text())
    dev_size = _setting(args, file_cfg, {}, "dev_size", 1500)
    if dev_size >= len(sentences):
        raise UsageError(
            f"dev_size {dev_size} is not smaller than the corpus ({len(sentences)})"
        )
    seed = _setting(args, file_cfg, {}, "seed", 0)
    train_sents, dev_sents = split_train_dev(sentences, dev_size, seed)

    pretrained = None
    emb_path = _setting(args, file_cfg, {}, "emb")
    if emb_path:
        with open(resolve_data_path(emb_path)) as fh:
            pretrained, emb_dim = load_text_embeddings(fh)

    model_kwargs = dict(preset_model)
    keys = _MODEL_KEYS_CNN if family == "cnn" else _MODEL_KEYS_RNN
    for key in keys:
        value = _setting(args, file_cfg, {}, key)
        if value is not None:
            model_kwargs[key] = value
    if pretrained is not None:
        explicit_dim = getattr(args, "word_dim", None) or file_cfg.get("word_dim")
        if explicit_dim is not None and explicit_dim != emb_dim:
            raise ParseError(
                f"embedding file has dimension {emb_dim}, but word_dim={explicit_dim}"
            )
        model_kwargs["word_dim"] = emb_dim
    config = CnnConfig(**model_kwargs) if family == "cnn" else RnnConfig(**model_kwargs)

    defaults = TrainConfig.cnn_defaults if family == "cnn" else TrainConfig.rnn_defaults
    train_kwargs = {"seed": seed}
    for key in ("epochs", "batch_size", "learning_rate", "l2_weight",
                "clip_threshold", "schedule"):
        value = _setting(args, file_cfg, {}, key)
        if value is not None:
            train_kwargs[key] = value
    train_config = defaults(**train_kwargs)

    include_pre = bool(_setting(args, file_cfg, {}, "include_pretrained_vocab", False))
    vocab = build_vocabulary(
        train_sents,
        pretrained_tokens=set(pretrained) if (pretrained and include_pre) else None,
        include_indicators=(family == "rnn" and config.pos_variant == "indicators"),
    )

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = train(config, train_sents, vocab, train_config,
                       dev_sentences=dev_sents, pretrained=pretrained)
    except TrainingDiverged as exc:
        if exc.last_good_params is not None:
            save_checkpoint(out / "model.diverged.ckpt", family, config,
                            exc.last_good_params, vocab, extra={"diverged": True})
            print(f"training diverged: {exc}; last good checkpoint saved", file=sys.stderr)
        else:
            print(f"training diverged before the first epoch finished: {exc}",
                  file=sys.stderr)
        return 3
    extra = {"seed": seed, "arch": arch}
    if result.history and "dev_f1" in result.history[-1]:
        extra["final_dev_f1"] = result.history[-1]["dev_f1"]
    save_checkpoint(out / "model.ckpt", family, config, result.params, vocab, extra=extra)
    (out / "manifest.txt").write_text(manifest_to_text(result.manifest))
    print(f"checkpoint written to {out / 'model.ckpt'}")
    if "final.dev_f1" in result.manifest:
        print(f"final dev macro-F1: {result.manifest['final.dev_f1']}")
    return 0


def cmd_predict(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    text = resolve_data_path(args.data).read_text()
    sentences = parse_semeval_file(text, require_labels=False)
    adapter = ModelAdapter(ckpt.config)
    examples = [adapter.prepare(s, ckpt.vocab) for s in sentences]
    predictions = predict_examples(adapter, ckpt.params, examples)
    Path(args.out).write_text(write_predictions(predictions))
    print(f"{len(predictions)} predictions written to {args.out}")
    return 0


def cmd_eval(args) -> int:
    gold = read_gold_file(resolve_data_path(args.gold).read_text())
    reports = []
    for pred_path in args.predictions:
        preds = read_predictions(resolve_data_path(pred_path).read_text())
        report = macro_f1(gold, preds)
        reports.append((pred_path, preds, report))
        print(f"== {pred_path}")
        print(format_report(report))
    if len(reports) == 2:
        (_, preds_a, _), (_, preds_b, _) = reports
        z, p = significance_z_test(preds_a, preds_b, gold)
        print(f"z = {z:.4f}")
        print(f"p_value = {p:.6g}")
    return 0


def cmd_ensemble(args) -> int:
    sets = [
        read_predictions(resolve_data_path(p).read_text()) for p in args.predictions
    ]
    voted = ensemble_vote(sets, seed=args.seed)
    Path(args.out).write_text(write_predictions(voted))
    print(f"ensemble of {len(sets)} prediction sets written to {args.out}")
    return 0


def cmd_gradcheck(args) -> int:
    try:
        report = run_gradcheck(args.arch, seed=args.seed, epsilon=args.epsilon,
                               tolerance=args.tolerance)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(report.format())
    return 0 if report.passed else 3


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except TrainingDiverged as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ParseError, CheckpointError, FileNotFoundError, NotADirectoryError,
            PermissionError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
