"""Checkpoint file: b"CWCP1", one line of JSON header, then float32 LE payload."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..grad.tensor import Tensor
from .config import TransformerConfig

MAGIC = b"CWCP1"


class CheckpointError(ValueError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


def save_checkpoint(params: dict, cfg: TransformerConfig, metadata: dict, path) -> None:
    table, chunks, offset = [], [], 0
    for name, t in params.items():
        arr = np.ascontiguousarray(getattr(t, "data", t), dtype="<f4")
        table.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(arr.tobytes())
        offset += arr.nbytes
    header = {"config": cfg.to_dict(), "metadata": metadata, "tensors": table, "payload_bytes": offset}
    line = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(line + b"\n")
        for c in chunks:
            fh.write(c)


def load_checkpoint(path) -> tuple[dict[str, Tensor], TransformerConfig, dict]:
    raw = Path(path).read_bytes()
    if raw[:len(MAGIC)] != MAGIC:
        raise CheckpointVersionError(f"{path}: bad magic {raw[:len(MAGIC)]!r}, expected {MAGIC!r}")
    nl = raw.find(b"\n", len(MAGIC))
    if nl < 0:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[len(MAGIC):nl])
    except json.JSONDecodeError as err:
        raise CheckpointError(f"{path}: corrupt header ({err})") from None
    payload = raw[nl + 1:]
    expected = sum(4 * int(np.prod(t["shape"])) for t in header["tensors"])
    if expected != header.get("payload_bytes", expected):
        raise CheckpointError(f"{path}: shape table implies {expected} bytes, header says {header['payload_bytes']}")
    if len(payload) != expected:
        raise CheckpointError(f"{path}: payload has {len(payload)} bytes, shape table needs {expected}")
    cfg = TransformerConfig.from_dict(header["config"])
    params = {}
    for t in header["tensors"]:
        n = int(np.prod(t["shape"]))
        arr = np.frombuffer(payload, dtype="<f4", count=n, offset=t["offset"]).reshape(t["shape"])
        params[t["name"]] = Tensor(arr.astype(np.float64), requires_grad=True, name=t["name"])
    return params, cfg, header.get("metadata", {})


def quantize(params: dict) -> dict[str, Tensor]:
    """The in-memory parameters as they come back from a checkpoint."""
    return {k: Tensor(np.asarray(getattr(v, "data", v), dtype=np.float32).astype(np.float64),
                      requires_grad=True, name=k) for k, v in params.items()}
