"""Versioned model checkpoints.

A checkpoint is a zip archive: meta.json (format version, model kind and
config, per-tensor shapes/dtypes/sha256), vocab.txt (one token per line)
and one .npy entry per named tensor. Entries are stored uncompressed with
fixed timestamps in a fixed order, so identical runs produce byte-identical
files, and float64 tensors round-trip bit-exactly.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import zipfile
from dataclasses import dataclass

import numpy as np

from .cnn import CnnConfig
from .corpus import Vocabulary
from .rnn import RnnConfig

FORMAT_NAME = "relclass-checkpoint"
FORMAT_VERSION = 1

_FIXED_DATE = (1980, 1, 1, 0, 0, 0)


class CheckpointError(RuntimeError):
    pass


@dataclass
class Checkpoint:
    kind: str                 # "cnn" | "rnn"
    config: object            # CnnConfig | RnnConfig
    params: dict
    vocab: Vocabulary
    extra: dict

    @property
    def objective(self) -> str:
        return self.config.objective


def config_to_dict(config) -> dict:
    out = {}
    for key, value in vars(config).items():
        out[key] = list(value) if isinstance(value, tuple) else value
    return out


def config_from_dict(kind: str, data: dict):
    data = dict(data)
    if kind == "cnn":
        if "window_sizes" in data:
            data["window_sizes"] = tuple(data["window_sizes"])
        return CnnConfig(**data)
    if kind == "rnn":
        return RnnConfig(**data)
    raise CheckpointError(f"unknown checkpoint kind {kind!r}")


def _entry(name: str) -> zipfile.ZipInfo:
    info = zipfile.ZipInfo(name, date_time=_FIXED_DATE)
    info.compress_type = zipfile.ZIP_STORED
    return info


def save_checkpoint(path, kind: str, config, params: dict, vocab: Vocabulary,
                    extra: dict | None = None) -> None:
    """Atomic write: assemble to a temp file, then rename into place."""
    tensors = []
    blobs = {}
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name], dtype=np.float64)
        buf = io.BytesIO()
        np.save(buf, arr)
        entry = f"tensors/{len(tensors):04d}.npy"
        tensors.append(
            {
                "name": name,
                "entry": entry,
                "shape": list(arr.shape),
                "dtype": str(arr.dtype),
                "sha256": hashlib.sha256(arr.tobytes()).hexdigest(),
            }
        )
        blobs[entry] = buf.getvalue()
    meta = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": kind,
        "config": config_to_dict(config),
        "tensors": tensors,
        "extra": extra or {},
    }
    tmp = f"{path}.tmp"
    with zipfile.ZipFile(tmp, "w") as zf:
        zf.writestr(_entry("meta.json"), json.dumps(meta, sort_keys=True, indent=1))
        zf.writestr(_entry("vocab.txt"), "\n".join(vocab.id_to_token) + "\n")
        for entry in sorted(blobs):
            zf.writestr(_entry(entry), blobs[entry])
    os.replace(tmp, path)


def load_checkpoint(path) -> Checkpoint:
    try:
        with zipfile.ZipFile(path) as zf:
            meta = json.loads(zf.read("meta.json"))
            if meta.get("format") != FORMAT_NAME:
                raise CheckpointError(f"{path}: not a relclass checkpoint")
            if meta.get("version") != FORMAT_VERSION:
                raise CheckpointError(
                    f"{path}: unsupported checkpoint version {meta.get('version')}"
                )
            vocab = Vocabulary(zf.read("vocab.txt").decode().splitlines())
            params = {}
            for spec in meta["tensors"]:
                arr = np.load(io.BytesIO(zf.read(spec["entry"])))
                digest = hashlib.sha256(arr.tobytes()).hexdigest()
                if digest != spec["sha256"]:
                    raise CheckpointError(
                        f"{path}: checksum mismatch for tensor {spec['name']!r}"
                    )
                if list(arr.shape) != spec["shape"]:
                    raise CheckpointError(f"{path}: shape mismatch for {spec['name']!r}")
                params[spec["name"]] = arr
    except (zipfile.BadZipFile, KeyError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupted checkpoint ({exc})") from None
    kind = meta["kind"]
    config = config_from_dict(kind, meta["config"])
    return Checkpoint(kind, config, params, vocab, meta.get("extra", {}))
