"""Method configuration and dispatch: one outcome space in, one result out."""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import clustering, engine
from .corpus import OutcomeSpace
from .utility import EmbeddingSet, UtilityMatrix

METHODS = ("standard", "cutoff", "cluster", "embed")


@dataclass(frozen=True)
class MethodConfig:
    """Fully resolved settings for one selection method.

    ``exclude_self=None`` means the per-method default (False for standard,
    True for the adapted methods). ``delta`` is a constant or the string
    "drop". ``clusters`` chooses between gold labels and k-means over the
    supplied embeddings.
    """

    method: str = "standard"
    exclude_self: bool | None = None
    tau: float = engine.TUNED_CUTOFF_TAU["bertscore"]
    delta: float | str = 0.0
    cutoff_mode: str = "absolute"
    cos_threshold: float | None = None
    clusters: str = "gold"  # gold | kmeans
    k_min: int = 2
    k_max: int = 6
    silhouette_floor: float = clustering.DEFAULT_SILHOUETTE_FLOOR
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.clusters not in ("gold", "kmeans"):
            raise ValueError(f"unknown cluster source {self.clusters!r}")

    @property
    def effective_exclude_self(self) -> bool:
        if self.exclude_self is not None:
            return self.exclude_self
        return engine.DEFAULT_EXCLUDE_SELF[self.method]

    def with_threshold(self, value: float) -> "MethodConfig":
        """A copy with the method's swept threshold replaced."""
        if self.method == "cutoff":
            return replace(self, tau=value)
        if self.method == "embed":
            return replace(self, cos_threshold=value)
        raise ValueError(f"method {self.method!r} has no threshold to sweep")


def apply_method(
    space: OutcomeSpace,
    matrix: UtilityMatrix,
    config: MethodConfig,
    embeddings: EmbeddingSet | None = None,
) -> engine.MbrResult:
    """Run the configured method on one outcome space."""
    weights = space.weights()
    exclude_self = config.effective_exclude_self
    if config.method == "standard":
        return engine.mbr_select(matrix, weights, exclude_self=exclude_self)
    if config.method == "cutoff":
        return engine.cutoff_mbr(
            matrix,
            weights,
            tau=config.tau,
            delta=config.delta,
            mode=config.cutoff_mode,
            exclude_self=exclude_self,
        )
    if config.method == "cluster":
        if config.clusters == "gold":
            assignment = clustering.assignment_from_labels(space.labels())
        else:
            if embeddings is None:
                raise ValueError("cluster method with kmeans clusters needs embeddings")
            assignment = clustering.select_k(
                embeddings,
                kmin=config.k_min,
                kmax=min(config.k_max, embeddings.n),
                silhouette_floor=config.silhouette_floor,
                seed=config.seed,
            )
        return engine.cluster_mbr(matrix, assignment, weights, exclude_self=exclude_self)
    if config.method == "embed":
        if embeddings is None:
            raise ValueError("embed method needs embeddings")
        return engine.embedding_mbr(
            matrix,
            embeddings,
            weights,
            cos_threshold=config.cos_threshold,
            exclude_self=exclude_self,
        )
    raise AssertionError(f"unhandled method {config.method!r}")
