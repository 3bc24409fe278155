"""Outcome-space data model, corpus file IO, splitting, and synthetic generation.

An *outcome space* is one context together with the candidate generations
sampled for it. Corpora are stored as UTF-8 line-delimited JSON: one object
per space with fields ``id``, ``context`` and ``candidates`` (each candidate
an object with ``text``, optional ``label`` and optional ``weight``).
Unknown fields are ignored on read and never written.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class CorpusError(ValueError):
    """Raised when corpus content violates the schema or an invariant."""


@dataclass(frozen=True)
class Candidate:
    text: str
    label: str | None = None
    weight: float = 1.0

    def __post_init__(self):
        if not self.text.strip():
            raise CorpusError("candidate text is empty")
        if not (self.weight >= 0.0):
            raise CorpusError(f"candidate weight must be >= 0, got {self.weight}")


@dataclass(frozen=True)
class OutcomeSpace:
    """One context plus its candidate generations.

    Candidate order is canonical: every matrix or embedding set referring to
    this space indexes candidates in this order.
    """

    id: str
    context: str
    candidates: tuple[Candidate, ...]

    def __post_init__(self):
        if len(self.candidates) < 2:
            raise CorpusError(f"space {self.id}: fewer than 2 candidates")
        labelled = sum(1 for c in self.candidates if c.label is not None)
        if labelled not in (0, len(self.candidates)):
            raise CorpusError(f"space {self.id}: mixed labelled/unlabelled candidates")
        if not any(c.weight > 0 for c in self.candidates):
            raise CorpusError(f"space {self.id}: all candidate weights are zero")

    @property
    def n(self) -> int:
        return len(self.candidates)

    @property
    def labelled(self) -> bool:
        return self.candidates[0].label is not None

    def texts(self) -> list[str]:
        return [c.text for c in self.candidates]

    def labels(self) -> list[str]:
        if not self.labelled:
            raise CorpusError(f"space {self.id}: unlabelled")
        return [c.label for c in self.candidates]  # type: ignore[misc]

    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.candidates], dtype=np.float64)


@dataclass(frozen=True)
class Corpus:
    spaces: tuple[OutcomeSpace, ...]
    provenance: str = ""

    def __post_init__(self):
        ids = [s.id for s in self.spaces]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise CorpusError(f"duplicate space id {dup!r}")

    def __len__(self) -> int:
        return len(self.spaces)

    def ids(self) -> list[str]:
        return [s.id for s in self.spaces]


def _candidate_from_obj(obj: dict, where: str) -> Candidate:
    if not isinstance(obj, dict) or "text" not in obj:
        raise CorpusError(f"{where}: candidate is not an object with a 'text' field")
    text = obj["text"]
    if not isinstance(text, str):
        raise CorpusError(f"{where}: candidate text is not a string")
    label = obj.get("label")
    if label is not None and not isinstance(label, str):
        raise CorpusError(f"{where}: candidate label is not a string")
    weight = obj.get("weight", 1.0)
    if not isinstance(weight, (int, float)) or isinstance(weight, bool):
        raise CorpusError(f"{where}: candidate weight is not a number")
    return Candidate(text=text, label=label, weight=float(weight))


def load_corpus(path: str | Path) -> Corpus:
    """Load a line-delimited corpus file, checking every invariant.

    Raises FileNotFoundError when the path does not exist and CorpusError on
    schema violations (error messages carry the offending line number).
    """
    path = Path(path)
    spaces: list[OutcomeSpace] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise CorpusError(f"line {lineno}: record is not an object")
            for key in ("id", "context", "candidates"):
                if key not in obj:
                    raise CorpusError(f"line {lineno}: missing field {key!r}")
            if not isinstance(obj["id"], str) or not isinstance(obj["context"], str):
                raise CorpusError(f"line {lineno}: 'id' and 'context' must be strings")
            if not isinstance(obj["candidates"], list):
                raise CorpusError(f"line {lineno}: 'candidates' must be an array")
            where = f"line {lineno} (space {obj['id']})"
            try:
                candidates = tuple(_candidate_from_obj(c, where) for c in obj["candidates"])
                spaces.append(OutcomeSpace(id=obj["id"], context=obj["context"], candidates=candidates))
            except CorpusError:
                raise
    return Corpus(spaces=tuple(spaces), provenance=str(path))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus in the line-delimited format; byte-deterministic."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for space in corpus.spaces:
            cands = []
            for c in space.candidates:
                obj: dict = {"text": c.text}
                if c.label is not None:
                    obj["label"] = c.label
                if c.weight != 1.0:
                    obj["weight"] = c.weight
                cands.append(obj)
            record = {"id": space.id, "context": space.context, "candidates": cands}
            fh.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n")


def split_corpus(
    corpus: Corpus, fractions: tuple[float, float, float], seed: int
) -> tuple[Corpus, Corpus, Corpus]:
    """Partition spaces into (train, val, test) splits.

    Val and test sizes are floor-rounded; the remainder goes to train.
    Deterministic given the seed.
    """
    if len(corpus) == 0:
        raise CorpusError("cannot split an empty corpus")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise CorpusError(f"fractions must sum to 1, got {fractions}")
    for f in fractions:
        if not (0.0 < f < 1.0):
            raise CorpusError(f"each fraction must lie in (0,1), got {fractions}")
    n = len(corpus)
    n_val = int(np.floor(fractions[1] * n))
    n_test = int(np.floor(fractions[2] * n))
    n_train = n - n_val - n_test

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    train_idx = sorted(order[:n_train])
    val_idx = sorted(order[n_train : n_train + n_val])
    test_idx = sorted(order[n_train + n_val :])

    def take(idx) -> Corpus:
        return Corpus(
            spaces=tuple(corpus.spaces[i] for i in idx),
            provenance=corpus.provenance,
        )

    return take(train_idx), take(val_idx), take(test_idx)


@dataclass(frozen=True)
class SynthConfig:
    """Controls for the seeded synthetic-corpus generator.

    ``separation`` scales down the per-token probability of drawing from the
    shared vocabulary: the shared fraction is 1/(1+separation), so expected
    cross-cluster token-F1 is bounded by 1/(1+separation). Corrupted tokens
    are globally unique and therefore never match anything.
    """

    n_spaces: int = 10
    clusters_per_space: tuple[int, int] = (2, 4)
    candidates_per_cluster: int = 5
    vocab_per_cluster: int = 10
    shared_vocab: int = 4
    noise_rate: float = 0.05
    separation: float = 4.0
    include_compromise: bool = False
    seed: int = 0
    tokens_per_candidate: int = 12

    def __post_init__(self):
        if self.n_spaces < 1:
            raise CorpusError("n_spaces must be positive")
        lo, hi = self.clusters_per_space
        if not (1 <= lo <= hi <= 8):
            raise CorpusError("clusters_per_space range must lie within [1, 8]")
        if self.candidates_per_cluster < 1 or self.vocab_per_cluster < 1:
            raise CorpusError("candidates_per_cluster and vocab_per_cluster must be positive")
        if self.shared_vocab < 0:
            raise CorpusError("shared_vocab must be non-negative")
        if not (0.0 <= self.noise_rate < 0.5):
            raise CorpusError("noise_rate must lie in [0, 0.5)")
        if not (self.separation > 0):
            raise CorpusError("separation must be > 0")
        if self.tokens_per_candidate < 2:
            raise CorpusError("tokens_per_candidate must be >= 2")


def generate_synthetic(config: SynthConfig) -> Corpus:
    """Generate a labelled corpus with known latent cluster structure.

    Each space has k clusters (k uniform in the configured range). A
    candidate's first token is its cluster's anchor token, so with disjoint
    vocabularies and zero noise the gold clusters are exactly the connected
    components of the token-F1 > 0 graph. If ``include_compromise``, one
    extra candidate mixes tokens of the two largest clusters evenly and is
    labelled "compromise".
    """
    rng = np.random.default_rng(config.seed)
    shared_frac = 1.0 / (1.0 + config.separation) if config.shared_vocab > 0 else 0.0
    noise_counter = 0
    spaces: list[OutcomeSpace] = []
    for si in range(config.n_spaces):
        lo, hi = config.clusters_per_space
        k = int(rng.integers(lo, hi + 1))
        cluster_vocab = [
            [f"s{si}c{ci}t{ti}" for ti in range(config.vocab_per_cluster)] for ci in range(k)
        ]
        shared = [f"s{si}sh{ti}" for ti in range(config.shared_vocab)]

        def draw_text(ci: int) -> str:
            nonlocal noise_counter
            tokens = [cluster_vocab[ci][0]]  # cluster anchor
            for _ in range(config.tokens_per_candidate - 1):
                if shared and rng.random() < shared_frac:
                    tokens.append(shared[int(rng.integers(len(shared)))])
                else:
                    tokens.append(cluster_vocab[ci][int(rng.integers(config.vocab_per_cluster))])
            for pos in range(len(tokens)):
                if rng.random() < config.noise_rate:
                    tokens[pos] = f"zz{noise_counter}"
                    noise_counter += 1
            return " ".join(tokens)

        candidates = [
            Candidate(text=draw_text(ci), label=f"c{ci}")
            for ci in range(k)
            for _ in range(config.candidates_per_cluster)
        ]
        if config.include_compromise:
            # Mix the two largest clusters evenly (all equal-sized: take 0 and 1),
            # leading with both cluster anchors.
            a, b = (0, 1) if k >= 2 else (0, 0)
            tokens = [cluster_vocab[a][0], cluster_vocab[b][0]]
            for pos in range(config.tokens_per_candidate - 2):
                src = a if pos % 2 == 0 else b
                tokens.append(cluster_vocab[src][int(rng.integers(config.vocab_per_cluster))])
            candidates.append(Candidate(text=" ".join(tokens), label="compromise"))

        spaces.append(
            OutcomeSpace(id=f"synth{si}", context=f"synthetic context {si}", candidates=tuple(candidates))
        )
    return Corpus(spaces=tuple(spaces), provenance=f"synthetic:seed={config.seed}")
