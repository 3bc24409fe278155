"""Writers for the ``.umat`` / ``.emb`` file pairs.

The formats are the contract with the consuming toolkit: a JSON metadata
file plus a little-endian float32 row-major payload. Writes are atomic
(temp file, then rename) so a crashed export never leaves a torn pair.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

F32 = np.dtype("<f4")


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_matrix(values: np.ndarray, kind: str, stem: str | Path) -> None:
    values = np.ascontiguousarray(values, dtype=F32)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError(f"matrix must be square, got shape {values.shape}")
    if not np.isfinite(values).all():
        raise ValueError("matrix contains non-finite values")
    stem = Path(stem)
    n = values.shape[0]
    meta = {"n": n, "dtype": "f32le", "order": "row-major", "kind": kind}
    _atomic_write_text(
        stem.with_name(stem.name + ".umat.json"), json.dumps(meta, separators=(",", ":")) + "\n"
    )
    _atomic_write_bytes(stem.with_name(stem.name + ".umat.bin"), values.tobytes())


def write_embeddings(vectors: np.ndarray, normalized: bool, stem: str | Path) -> None:
    vectors = np.ascontiguousarray(vectors, dtype=F32)
    if vectors.ndim != 2:
        raise ValueError(f"embeddings must be 2-d, got shape {vectors.shape}")
    if not np.isfinite(vectors).all():
        raise ValueError("embeddings contain non-finite values")
    stem = Path(stem)
    n, d = vectors.shape
    meta = {"n": n, "d": d, "dtype": "f32le", "order": "row-major", "normalized": normalized}
    _atomic_write_text(
        stem.with_name(stem.name + ".emb.json"), json.dumps(meta, separators=(",", ":")) + "\n"
    )
    _atomic_write_bytes(stem.with_name(stem.name + ".emb.bin"), vectors.tobytes())
