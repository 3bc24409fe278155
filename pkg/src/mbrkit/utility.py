"""Lexical utility backends, pairwise utility matrices, and bit-exact file IO.

Matrices and embeddings are held as little-endian float32 so that
save -> load is a bitwise identity. External tools (e.g. a neural scorer)
produce the same ``.umat`` / ``.emb`` file pairs; their entries are accepted
as-is (no symmetry or range requirements beyond finiteness).

File formats:
  <name>.umat.json  {"n": int, "dtype": "f32le", "order": "row-major", "kind": str}
  <name>.umat.bin   n*n little-endian float32, row-major
  <name>.emb.json   {"n": int, "d": int, "dtype": "f32le", "order": "row-major", "normalized": bool}
  <name>.emb.bin    n*d little-endian float32, row-major
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import OutcomeSpace

BUILTIN_KINDS = ("token_f1", "char_ngram_f")

F32 = np.dtype("<f4")


class MatrixFormatError(ValueError):
    """Raised on malformed or inconsistent matrix/embedding files."""


@dataclass(frozen=True)
class UtilityMatrix:
    """n x n pairwise utility values for one outcome space, row = hypothesis."""

    n: int
    values: np.ndarray  # float32, shape (n, n)
    kind: str

    def __post_init__(self):
        if self.n < 1:
            raise MatrixFormatError("matrix n must be positive")
        if self.values.shape != (self.n, self.n):
            raise MatrixFormatError(f"matrix shape {self.values.shape} does not match n={self.n}")
        if self.values.dtype != np.float32:
            object.__setattr__(self, "values", self.values.astype(np.float32))
        if not np.isfinite(self.values).all():
            raise MatrixFormatError("matrix contains non-finite values")
        if not self.kind:
            raise MatrixFormatError("matrix kind must be non-empty")
        if self.kind in BUILTIN_KINDS:
            v = self.values
            if v.min() < -1e-6 or v.max() > 1.0 + 1e-6:
                raise MatrixFormatError(f"{self.kind} utilities must lie in [0,1]")


@dataclass(frozen=True)
class EmbeddingSet:
    """n x d structure-sensitive vectors, aligned with candidate order."""

    n: int
    d: int
    vectors: np.ndarray  # float32, shape (n, d)
    normalized: bool = False

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise MatrixFormatError("embedding n and d must be positive")
        if self.vectors.shape != (self.n, self.d):
            raise MatrixFormatError(
                f"embedding shape {self.vectors.shape} does not match (n,d)=({self.n},{self.d})"
            )
        if self.vectors.dtype != np.float32:
            object.__setattr__(self, "vectors", self.vectors.astype(np.float32))
        if not np.isfinite(self.vectors).all():
            raise MatrixFormatError("embeddings contain non-finite values")
        if self.normalized:
            norms = np.linalg.norm(self.vectors.astype(np.float64), axis=1)
            if np.abs(norms - 1.0).max() > 1e-6:
                raise MatrixFormatError("normalized=true but row norms deviate from 1 by > 1e-6")


def token_f1(a: str, b: str) -> float:
    """Multiset F1 over lowercased whitespace tokens; symmetric, in [0,1]."""
    ta = Counter(a.lower().split())
    tb = Counter(b.lower().split())
    na, nb = sum(ta.values()), sum(tb.values())
    if na == 0 and nb == 0:
        return 1.0
    if na == 0 or nb == 0:
        return 0.0
    overlap = sum((ta & tb).values())
    return 2.0 * overlap / (na + nb)


def _char_ngrams(s: str, n: int) -> Counter:
    return Counter(s[i : i + n] for i in range(len(s) - n + 1))


def char_ngram_f(a: str, b: str, n: int = 4, beta: float = 1.0) -> float:
    """Mean F_beta over character n-gram orders 1..n (beta weights recall).

    Whitespace is removed before n-gram extraction. Orders where neither
    string has n-grams are skipped; with beta != 1 the score is directional
    (``b`` is the reference side).
    """
    if not (1 <= n <= 10):
        raise ValueError(f"n must lie in [1, 10], got {n}")
    if not (beta > 0):
        raise ValueError(f"beta must be > 0, got {beta}")
    sa = "".join(a.split())
    sb = "".join(b.split())
    if sa == sb:
        return 1.0  # identical content (both-empty included, as for token_f1)
    beta2 = beta * beta
    total = 0.0
    orders = 0
    for order in range(1, n + 1):
        ga = _char_ngrams(sa, order)
        gb = _char_ngrams(sb, order)
        ca, cb = sum(ga.values()), sum(gb.values())
        if ca == 0 and cb == 0:
            continue
        orders += 1
        if ca == 0 or cb == 0:
            continue  # F = 0 for this order
        overlap = sum((ga & gb).values())
        if overlap == 0:
            continue
        precision = overlap / ca
        recall = overlap / cb
        total += (1 + beta2) * precision * recall / (beta2 * precision + recall)
    if orders == 0:
        return 0.0
    return total / orders


def make_backend(name: str, **params):
    """Resolve a backend identifier to a pairwise scoring callable."""
    if name == "token_f1":
        if params:
            raise ValueError(f"token_f1 takes no parameters, got {params}")
        return token_f1
    if name == "char_ngram_f":
        n = int(params.pop("n", 4))
        beta = float(params.pop("beta", 1.0))
        if params:
            raise ValueError(f"unknown char_ngram_f parameters {params}")
        return lambda a, b: char_ngram_f(a, b, n=n, beta=beta)
    raise ValueError(f"unknown utility backend {name!r}")


def build_utility_matrix(space: OutcomeSpace, backend: str = "token_f1", **params) -> UtilityMatrix:
    """Compute the full pairwise utility matrix for one outcome space."""
    fn = make_backend(backend, **params)
    texts = space.texts()
    n = len(texts)
    values = np.empty((n, n), dtype=np.float32)
    for i in range(n):
        for j in range(n):
            values[i, j] = fn(texts[i], texts[j])
    return UtilityMatrix(n=n, values=values, kind=backend)


# ---------------------------------------------------------------------------
# File IO
# ---------------------------------------------------------------------------

_MATRIX_SUFFIXES = (".umat.json", ".umat.bin", ".umat")
_EMB_SUFFIXES = (".emb.json", ".emb.bin", ".emb")


def _stem(path: str | Path, suffixes) -> Path:
    s = str(path)
    for suf in suffixes:
        if s.endswith(suf):
            return Path(s[: -len(suf)])
    return Path(s)


def save_matrix(m: UtilityMatrix, path: str | Path) -> None:
    stem = _stem(path, _MATRIX_SUFFIXES)
    meta = {"n": m.n, "dtype": "f32le", "order": "row-major", "kind": m.kind}
    stem.with_name(stem.name + ".umat.json").write_text(
        json.dumps(meta, separators=(",", ":")) + "\n", encoding="utf-8"
    )
    payload = np.ascontiguousarray(m.values, dtype=F32).tobytes()
    stem.with_name(stem.name + ".umat.bin").write_bytes(payload)


def load_matrix(path: str | Path) -> UtilityMatrix:
    stem = _stem(path, _MATRIX_SUFFIXES)
    meta_path = stem.with_name(stem.name + ".umat.json")
    bin_path = stem.with_name(stem.name + ".umat.bin")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    for key in ("n", "dtype", "order", "kind"):
        if key not in meta:
            raise MatrixFormatError(f"{meta_path}: missing metadata field {key!r}")
    if meta["dtype"] != "f32le" or meta["order"] != "row-major":
        raise MatrixFormatError(f"{meta_path}: unsupported dtype/order {meta['dtype']}/{meta['order']}")
    n = int(meta["n"])
    payload = bin_path.read_bytes()
    expected = n * n * 4
    if len(payload) != expected:
        raise MatrixFormatError(
            f"{bin_path}: payload length mismatch (expected {expected} bytes, got {len(payload)})"
        )
    values = np.frombuffer(payload, dtype=F32).reshape(n, n).copy()
    if not np.isfinite(values).all():
        raise MatrixFormatError(f"{bin_path}: non-finite values in payload")
    return UtilityMatrix(n=n, values=values, kind=str(meta["kind"]))


def save_embeddings(e: EmbeddingSet, path: str | Path) -> None:
    stem = _stem(path, _EMB_SUFFIXES)
    meta = {"n": e.n, "d": e.d, "dtype": "f32le", "order": "row-major", "normalized": e.normalized}
    stem.with_name(stem.name + ".emb.json").write_text(
        json.dumps(meta, separators=(",", ":")) + "\n", encoding="utf-8"
    )
    payload = np.ascontiguousarray(e.vectors, dtype=F32).tobytes()
    stem.with_name(stem.name + ".emb.bin").write_bytes(payload)


def load_embeddings(path: str | Path, normalize: bool = False) -> EmbeddingSet:
    """Load an embedding file pair; ``normalize=True`` rescales rows to unit norm."""
    stem = _stem(path, _EMB_SUFFIXES)
    meta_path = stem.with_name(stem.name + ".emb.json")
    bin_path = stem.with_name(stem.name + ".emb.bin")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    for key in ("n", "d", "dtype", "order", "normalized"):
        if key not in meta:
            raise MatrixFormatError(f"{meta_path}: missing metadata field {key!r}")
    if meta["dtype"] != "f32le" or meta["order"] != "row-major":
        raise MatrixFormatError(f"{meta_path}: unsupported dtype/order {meta['dtype']}/{meta['order']}")
    n, d = int(meta["n"]), int(meta["d"])
    payload = bin_path.read_bytes()
    expected = n * d * 4
    if len(payload) != expected:
        raise MatrixFormatError(
            f"{bin_path}: payload length mismatch (expected {expected} bytes, got {len(payload)})"
        )
    vectors = np.frombuffer(payload, dtype=F32).reshape(n, d).copy()
    if not np.isfinite(vectors).all():
        raise MatrixFormatError(f"{bin_path}: non-finite values in payload")
    normalized = bool(meta["normalized"])
    if normalize and not normalized:
        return normalize_embeddings(EmbeddingSet(n=n, d=d, vectors=vectors, normalized=False))
    return EmbeddingSet(n=n, d=d, vectors=vectors, normalized=normalized)


def normalize_embeddings(e: EmbeddingSet) -> EmbeddingSet:
    """Rescale every row to unit Euclidean norm; zero-norm rows are an error."""
    if e.normalized:
        return e
    norms = np.linalg.norm(e.vectors.astype(np.float64), axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise MatrixFormatError(f"zero-norm row {zero[0]}")
    vectors = (e.vectors.astype(np.float64) / norms[:, None]).astype(np.float32)
    return EmbeddingSet(n=e.n, d=e.d, vectors=vectors, normalized=True)
