"""Structural-optimality evaluation.

Two corpus-level metrics over labelled outcome spaces:

* cluster optimality (CO): fraction of spaces where the method's selection
  equals the selection conditioned on the selection's own gold structure;
* cluster-optimal rank correlation (CORC): mean Spearman correlation, within
  each gold structure, between the method's scores and the
  structure-conditional scores, averaged over structures and then spaces.

The conditional oracle always runs on the base (untransformed) utility
matrix. Selecting a compromise candidate that forms a singleton gold cluster
counts as a miss: a singleton is trivially its own conditional optimum and
would otherwise hide exactly the failure these metrics exist to expose.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .corpus import Corpus
from .methods import MethodConfig, apply_method
from .utility import EmbeddingSet, UtilityMatrix

COMPROMISE_LABEL = "compromise"


def _fractional_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(a, b) -> float:
    """Spearman's rho via fractional (average) ranks; NaN if a side is constant."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.ndim != 1 or len(a) < 2:
        raise ValueError("spearman needs two 1-d sequences of length >= 2")
    if (a == a[0]).all() or (b == b[0]).all():
        return float("nan")
    ra = _fractional_ranks(a)
    rb = _fractional_ranks(b)
    da = ra - ra.mean()
    db = rb - rb.mean()
    return float((da * db).sum() / math.sqrt((da * da).sum() * (db * db).sum()))


@dataclass(frozen=True)
class SpaceEval:
    space_id: str
    co_hit: bool
    mean_rho: float  # NaN when no structure yields a defined correlation
    n_structures_defined: int = 0


@dataclass(frozen=True)
class EvalReport:
    co: float
    corc: float
    per_space: tuple[SpaceEval, ...]
    method: str
    n_spaces: int
    diagnostics: dict = field(default_factory=dict)


def _structure_members(labels: list[str]) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    for lab in dict.fromkeys(labels):  # first-appearance order
        out[lab] = np.array([i for i, l in enumerate(labels) if l == lab], dtype=int)
    return out


def _evaluate_space(space, matrix, config, emb, oracle_es, corc_structures, compromise_label):
    labels = space.labels()
    weights = space.weights()
    members = _structure_members(labels)

    result = apply_method(space, matrix, config, emb)
    chosen = result.selected
    s_chosen = labels[chosen]
    cluster = members[s_chosen]
    forced_miss = False
    singleton_hit = False
    if len(cluster) == 1:
        if s_chosen == compromise_label:
            co_hit = False
            forced_miss = True
        else:
            co_hit = True  # a singleton is trivially its own conditional optimum
            singleton_hit = True
    else:
        oracle = engine.conditional_mbr(matrix, labels, s_chosen, weights, exclude_self=oracle_es)
        co_hit = chosen == oracle.selected

    if corc_structures == "selected":
        std = engine.mbr_select(matrix, weights, exclude_self=False)
        structure_set = [labels[std.selected]]
    else:
        structure_set = list(members)
    rhos: list[float] = []
    for s in structure_set:
        idx = members[s]
        if len(idx) < 2:
            continue
        cond = engine.conditional_mbr(matrix, labels, s, weights, exclude_self=oracle_es)
        rho = spearman(result.scores[idx], cond.scores[idx])
        if not math.isnan(rho):
            rhos.append(rho)
    mean_rho = math.fsum(rhos) / len(rhos) if rhos else float("nan")
    space_eval = SpaceEval(
        space_id=space.id, co_hit=co_hit, mean_rho=mean_rho, n_structures_defined=len(rhos)
    )
    return space_eval, forced_miss, singleton_hit


def evaluate(
    corpus: Corpus,
    matrices: dict[str, UtilityMatrix],
    config: MethodConfig,
    embeddings: dict[str, EmbeddingSet] | None = None,
    oracle_exclude_self: bool | None = None,
    corc_structures: str = "all",
    compromise_label: str = COMPROMISE_LABEL,
    workers: int = 1,
) -> EvalReport:
    """CO and CORC of ``config`` over a labelled corpus.

    ``oracle_exclude_self=None`` makes the conditional oracle follow the
    method's own self-comparison setting. ``corc_structures`` is "all"
    (average over every gold structure) or "selected" (only the structure of
    the standard selection, for sensitivity analysis). Per-space evaluation
    runs on ``workers`` threads; aggregation order is fixed, so the report is
    identical regardless of scheduling.
    """
    if corc_structures not in ("all", "selected"):
        raise ValueError(f"unknown corc_structures {corc_structures!r}")
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    oracle_es = config.effective_exclude_self if oracle_exclude_self is None else oracle_exclude_self

    for space in corpus.spaces:
        if not space.labelled:
            raise ValueError(f"space {space.id}: unlabelled; CO/CORC need gold labels")
        if space.id not in matrices:
            raise ValueError(f"space {space.id}: no utility matrix supplied")
        if matrices[space.id].n != space.n:
            raise ValueError(
                f"space {space.id}: matrix n={matrices[space.id].n} does not match "
                f"{space.n} candidates"
            )

    def run(space):
        emb = embeddings.get(space.id) if embeddings else None
        return _evaluate_space(
            space, matrices[space.id], config, emb, oracle_es, corc_structures, compromise_label
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            evaluated = list(pool.map(run, corpus.spaces))
    else:
        evaluated = [run(space) for space in corpus.spaces]

    per_space = [e[0] for e in evaluated]
    forced_misses = sum(1 for e in evaluated if e[1])
    singleton_hits = sum(1 for e in evaluated if e[2])
    undefined_rho_spaces = sum(1 for s in per_space if math.isnan(s.mean_rho))

    co = math.fsum(1.0 for s in per_space if s.co_hit) / len(per_space)
    defined = [s.mean_rho for s in per_space if not math.isnan(s.mean_rho)]
    corc = math.fsum(defined) / len(defined) if defined else float("nan")
    return EvalReport(
        co=co,
        corc=corc,
        per_space=tuple(per_space),
        method=config.method,
        n_spaces=len(per_space),
        diagnostics={
            "forced_miss_compromise": forced_misses,
            "singleton_hits": singleton_hits,
            "undefined_rho_spaces": undefined_rho_spaces,
            "oracle_exclude_self": oracle_es,
            "corc_structures": corc_structures,
        },
    )


def cluster_optimality(
    corpus: Corpus,
    matrices: dict[str, UtilityMatrix],
    config: MethodConfig,
    embeddings: dict[str, EmbeddingSet] | None = None,
    **kwargs,
) -> EvalReport:
    """CO of the configured method (full report; read the ``co`` field)."""
    return evaluate(corpus, matrices, config, embeddings, **kwargs)


def corc(
    corpus: Corpus,
    matrices: dict[str, UtilityMatrix],
    config: MethodConfig,
    embeddings: dict[str, EmbeddingSet] | None = None,
    **kwargs,
) -> EvalReport:
    """CORC of the configured method (full report; read the ``corc`` field)."""
    return evaluate(corpus, matrices, config, embeddings, **kwargs)


def report_records(report: EvalReport) -> list[dict]:
    """Line-delimited serialization: one summary record, then one per space."""
    records: list[dict] = [
        {
            "type": "summary",
            "method": report.method,
            "co": report.co,
            "corc": None if math.isnan(report.corc) else report.corc,
            "n_spaces": report.n_spaces,
            "diagnostics": report.diagnostics,
        }
    ]
    for s in report.per_space:
        records.append(
            {
                "type": "space",
                "id": s.space_id,
                "co_hit": s.co_hit,
                "mean_rho": None if math.isnan(s.mean_rho) else s.mean_rho,
                "n_structures_defined": s.n_structures_defined,
            }
        )
    return records
