"""Binary matrix cache: a fixed header followed by row-major float64 data."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"LANTKMAT"
_HEADER = struct.Struct("<8sII")


def write_matrix(path, M, meta: dict | None = None) -> Path:
    """Write a 2-D array, plus a JSON sidecar (``<path>.json``) when meta is given."""
    path = Path(path)
    M = np.atleast_2d(np.asarray(M, dtype="<f8"))
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {M.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, M.shape[0], M.shape[1]))
        fh.write(np.ascontiguousarray(M).tobytes())
    if meta is not None:
        sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True, default=_jsonable))
    return path


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * rows * cols:
        raise ValueError(f"{path}: expected {rows}x{cols} float64 payload, got {len(body)} bytes")
    return np.frombuffer(body, dtype="<f8").reshape(rows, cols).copy()


def read_meta(path) -> dict:
    return json.loads(sidecar(path).read_text())


def sidecar(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
