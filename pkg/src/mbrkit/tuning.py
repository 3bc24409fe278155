"""Threshold selection for the cut-off and embedding-weighted methods.

Protocol: evaluate cluster optimality for every candidate setting on the
training split, rank the settings, keep the ``top_k`` best, and pick the one
with the highest validation CO. Ties resolve to the smaller threshold, then
mode order, then delta order as configured. CORC is reported alongside but
never optimized.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics
from .corpus import Corpus
from .methods import MethodConfig
from .utility import EmbeddingSet, UtilityMatrix, normalize_embeddings

DEFAULT_GRID_SIZE = 50


@dataclass(frozen=True)
class SweepConfig:
    grid: tuple[float, ...] | None = None  # None: data-driven range, 50 equal steps
    modes: tuple[str, ...] = ("absolute",)
    deltas: tuple = (0.0,)
    objective: str = "CO"
    top_k: int = 10
    grid_size: int = DEFAULT_GRID_SIZE

    def __post_init__(self):
        if self.grid is not None:
            if len(self.grid) == 0:
                raise ValueError("empty threshold grid")
            if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
                raise ValueError("threshold grid must be strictly increasing")
        if not self.modes or not self.deltas:
            raise ValueError("modes and deltas must be non-empty")
        if self.objective != "CO":
            raise ValueError("only CO is supported as the sweep objective")
        if self.top_k < 1 or self.grid_size < 1:
            raise ValueError("top_k and grid_size must be positive")


@dataclass(frozen=True)
class SweepSetting:
    threshold: float
    mode: str = "absolute"
    delta: float | str = 0.0


@dataclass(frozen=True)
class SweepEntry:
    setting: SweepSetting
    train_co: float
    train_corc: float
    val_co: float | None = None
    val_corc: float | None = None


@dataclass(frozen=True)
class SweepResult:
    ranked: tuple[SweepEntry, ...]  # top_k by train CO, best first
    chosen: SweepEntry
    trace: tuple[SweepEntry, ...]  # every evaluated setting, in grid order
    config: SweepConfig = field(default_factory=SweepConfig)


def _default_grid_from_matrices(matrices: dict[str, UtilityMatrix], size: int) -> tuple[float, ...]:
    lo, hi = np.inf, -np.inf
    for m in matrices.values():
        if m.n < 2:
            continue
        off = m.values[~np.eye(m.n, dtype=bool)].astype(np.float64)
        lo = min(lo, float(off.min()))
        hi = max(hi, float(off.max()))
    if not np.isfinite(lo) or not np.isfinite(hi) or hi <= lo:
        raise ValueError("cannot derive a threshold grid from the training matrices")
    return tuple(np.linspace(lo, hi, size))


def _default_grid_from_embeddings(embeddings: dict[str, EmbeddingSet], size: int) -> tuple[float, ...]:
    lo, hi = np.inf, -np.inf
    for e in embeddings.values():
        v = normalize_embeddings(e).vectors.astype(np.float64)
        sim = (np.clip(v @ v.T, -1.0, 1.0) + 1.0) / 2.0
        off = sim[~np.eye(e.n, dtype=bool)]
        if off.size == 0:
            continue
        lo = min(lo, float(off.min()))
        hi = max(hi, float(off.max()))
    if not np.isfinite(lo) or not np.isfinite(hi) or hi <= lo:
        raise ValueError("cannot derive a cosine-threshold grid from the embeddings")
    return tuple(np.linspace(lo, hi, size))


def _run_sweep(
    settings: list[SweepSetting],
    eval_train,
    eval_val,
    top_k: int,
) -> tuple[list[SweepEntry], SweepEntry, list[SweepEntry]]:
    trace: list[SweepEntry] = []
    for setting in settings:
        report = eval_train(setting)
        trace.append(SweepEntry(setting=setting, train_co=report.co, train_corc=report.corc))
    # Rank: train CO descending; ties keep grid order (smaller threshold,
    # then mode order, then delta order as listed).
    order = sorted(range(len(trace)), key=lambda i: (-trace[i].train_co, i))
    ranked: list[SweepEntry] = []
    for i in order[:top_k]:
        entry = trace[i]
        val_report = eval_val(entry.setting)
        entry = replace(entry, val_co=val_report.co, val_corc=val_report.corc)
        ranked.append(entry)
        trace[i] = entry
    chosen = max(enumerate(ranked), key=lambda kv: (kv[1].val_co, -kv[0]))[1]
    return ranked, chosen, trace


def sweep_cutoff(
    train_corpus: Corpus,
    train_matrices: dict[str, UtilityMatrix],
    val_corpus: Corpus,
    val_matrices: dict[str, UtilityMatrix],
    cfg: SweepConfig = SweepConfig(),
    base: MethodConfig | None = None,
) -> SweepResult:
    """Sweep the cut-off threshold, modes and deltas; pick by validation CO."""
    if len(train_corpus) == 0 or len(val_corpus) == 0:
        raise ValueError("train and validation corpora must be non-empty")
    grid = cfg.grid if cfg.grid is not None else _default_grid_from_matrices(train_matrices, cfg.grid_size)
    base = replace(base, method="cutoff") if base is not None else MethodConfig(method="cutoff")
    settings = [
        SweepSetting(threshold=float(t), mode=mode, delta=delta)
        for t in grid
        for mode in cfg.modes
        for delta in cfg.deltas
    ]

    def eval_on(corpus, matrices):
        def run(setting: SweepSetting):
            config = replace(base, tau=setting.threshold, cutoff_mode=setting.mode, delta=setting.delta)
            return metrics.evaluate(corpus, matrices, config)

        return run

    ranked, chosen, trace = _run_sweep(
        settings, eval_on(train_corpus, train_matrices), eval_on(val_corpus, val_matrices), cfg.top_k
    )
    return SweepResult(ranked=tuple(ranked), chosen=chosen, trace=tuple(trace), config=cfg)


def sweep_cosine_threshold(
    train_corpus: Corpus,
    train_matrices: dict[str, UtilityMatrix],
    val_corpus: Corpus,
    val_matrices: dict[str, UtilityMatrix],
    train_embeddings: dict[str, EmbeddingSet],
    val_embeddings: dict[str, EmbeddingSet],
    cfg: SweepConfig = SweepConfig(),
    base: MethodConfig | None = None,
) -> SweepResult:
    """Sweep the embedding-weighting cosine threshold; same selection protocol."""
    if len(train_corpus) == 0 or len(val_corpus) == 0:
        raise ValueError("train and validation corpora must be non-empty")
    grid = (
        cfg.grid
        if cfg.grid is not None
        else _default_grid_from_embeddings(train_embeddings, cfg.grid_size)
    )
    base = replace(base, method="embed") if base is not None else MethodConfig(method="embed")
    settings = [SweepSetting(threshold=float(t)) for t in grid]

    def eval_on(corpus, matrices, embeddings):
        def run(setting: SweepSetting):
            config = replace(base, cos_threshold=setting.threshold)
            return metrics.evaluate(corpus, matrices, config, embeddings)

        return run

    ranked, chosen, trace = _run_sweep(
        settings,
        eval_on(train_corpus, train_matrices, train_embeddings),
        eval_on(val_corpus, val_matrices, val_embeddings),
        cfg.top_k,
    )
    return SweepResult(ranked=tuple(ranked), chosen=chosen, trace=tuple(trace), config=cfg)
