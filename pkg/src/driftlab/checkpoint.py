"""Atomic, pickle-free persistence for run state and small text files.

Checkpoints are `.npz` archives: every numeric tensor is stored as a
named float64 array, and one reserved entry `meta` holds a JSON string
(as a 0-d unicode array) with the scalar fields. Loading never unpickles
anything, and float64 arrays round-trip bit-exactly.

All writes go through write-temp-then-rename in the target directory, so
a crash can leave a stray temp file but never a truncated artifact.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

__all__ = ["atomic_write_bytes", "save_state", "load_state"]

_META_KEY = "meta"


def atomic_write_bytes(path: str, data: bytes) -> None:
    """Write bytes to path via a same-directory temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_state(path: str, arrays: dict[str, np.ndarray], meta: dict) -> None:
    """Persist named arrays plus a JSON metadata object, atomically."""
    if _META_KEY in arrays:
        raise ValueError(f"array name {_META_KEY!r} is reserved for metadata")
    payload = {k: np.asarray(v) for k, v in arrays.items()}
    payload[_META_KEY] = np.array(json.dumps(meta, sort_keys=True))
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".npz")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, **payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_state(path: str) -> tuple[dict[str, np.ndarray], dict]:
    """Inverse of save_state; raises with the offending field on damage."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as archive:
        names = list(archive.files)
        if _META_KEY not in names:
            raise ValueError(f"{path}: missing {_META_KEY!r} entry; not a run checkpoint")
        try:
            meta = json.loads(str(archive[_META_KEY]))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: corrupt metadata JSON: {exc}") from exc
        arrays = {k: archive[k] for k in names if k != _META_KEY}
    return arrays, meta
