"""Model file format and external layer-stack loader.

Model file layout, all integers little-endian::

    magic   b"PSQ2"
    version uint32 (currently 1)
    meta    uint32 byte length, then UTF-8 JSON (vocab, dims, mode, hook,
            tensor names/shapes in storage order, loss history)
    weights float32 little-endian, row-major, tensors back to back
"""

from __future__ import annotations

import json
import os
import struct
import unicodedata

import numpy as np

from polspell.errors import LoadError
from polspell.neural.model import HookShape, Seq2SeqModel
from polspell.neural.vocab import CharVocab

MAGIC = b"PSQ2"
FORMAT_VERSION = 1


def _tensor_order(model: Seq2SeqModel) -> list[tuple[str, str]]:
    return [("param", k) for k in sorted(model.params)] + [
        ("buffer", k) for k in sorted(model.buffers)
    ]


def save_model(model: Seq2SeqModel, path: str | os.PathLike) -> None:
    order = _tensor_order(model)
    tensors = []
    for kind, name in order:
        arr = (model.params if kind == "param" else model.buffers)[name]
        tensors.append([kind, name, list(arr.shape)])
    meta = {
        "vocab": model.vocab.chars,
        "hidden": model.hidden,
        "embed": model.embed,
        "mode": model.mode,
        "hook": None if model.hook is None else {"layers": model.hook.layers, "dim": model.hook.dim},
        "tensors": tensors,
        "loss_history": [float(x) for x in model.loss_history],
    }
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(blob)))
        fh.write(blob)
        for kind, name in order:
            arr = (model.params if kind == "param" else model.buffers)[name]
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_model(path: str | os.PathLike) -> Seq2SeqModel:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise LoadError(f"cannot read model: {exc.strerror}", path) from exc
    if data[:4] != MAGIC:
        raise LoadError("not a model file (bad magic)", path)
    if len(data) < 12:
        raise LoadError("truncated header", path)
    version, meta_len = struct.unpack("<II", data[4:12])
    if version != FORMAT_VERSION:
        raise LoadError(f"unsupported model format version {version}", path)
    try:
        meta = json.loads(data[12:12 + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise LoadError(f"corrupt metadata: {exc}", path) from exc
    offset = 12 + meta_len
    params, buffers = {}, {}
    for kind, name, shape in meta["tensors"]:
        count = int(np.prod(shape)) if shape else 1
        end = offset + 4 * count
        if end > len(data):
            raise LoadError(f"truncated weights at tensor {name}", path)
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
        arr = arr.astype(np.float64).reshape(shape)
        (params if kind == "param" else buffers)[name] = arr
        offset = end
    if offset != len(data):
        raise LoadError(f"{len(data) - offset} trailing bytes after weights", path)
    hook = meta["hook"]
    try:
        model = Seq2SeqModel(
            CharVocab(meta["vocab"]),
            meta["hidden"],
            meta["embed"],
            meta["mode"] == "bi",
            None if hook is None else HookShape(hook["layers"], hook["dim"]),
            params,
            buffers,
        )
    except ValueError as exc:
        raise LoadError(f"inconsistent model: {exc}", path) from exc
    model.loss_history = list(meta.get("loss_history", []))
    return model


def external_layers_load(
    path: str | os.PathLike, dim: int | None = None, layers: int = 3
) -> dict[str, np.ndarray]:
    """Read ``token layer_index v1 .. v_dim`` lines into per-token (layers, dim) stacks.

    Layer indices are 0-based. Every token must supply every layer. With
    ``dim=None`` the width is taken from the first data line.
    """
    stacks: dict[str, np.ndarray] = {}
    seen: dict[str, set[int]] = {}
    first_line: dict[str, int] = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise LoadError(f"cannot read external layers: {exc.strerror}", path) from exc
    with fh:
        try:
            for lineno, line in enumerate(fh, 1):
                fields = line.split()
                if not fields or fields[0].startswith("#"):
                    continue
                if dim is None:
                    dim = len(fields) - 2
                    if dim < 1:
                        raise LoadError("no vector values", path, lineno)
                if len(fields) != dim + 2:
                    raise LoadError(f"expected {dim + 2} fields, got {len(fields)}", path, lineno)
                token = unicodedata.normalize("NFC", fields[0])
                try:
                    idx = int(fields[1])
                    vec = np.array([float(v) for v in fields[2:]])
                except ValueError as exc:
                    raise LoadError(f"bad number: {exc}", path, lineno) from exc
                if not 0 <= idx < layers:
                    raise LoadError(f"layer index {idx} outside 0..{layers - 1}", path, lineno)
                if token not in stacks:
                    stacks[token] = np.zeros((layers, dim))
                    seen[token] = set()
                    first_line[token] = lineno
                if idx in seen[token]:
                    raise LoadError(f"duplicate layer {idx} for {token!r}", path, lineno)
                stacks[token][idx] = vec
                seen[token].add(idx)
        except UnicodeDecodeError as exc:
            raise LoadError(f"malformed UTF-8 ({exc.reason})", path) from exc
    for token, got in seen.items():
        if len(got) != layers:
            missing = sorted(set(range(layers)) - got)
            raise LoadError(f"token {token!r} missing layers {missing}", path, first_line[token])
    return stacks
