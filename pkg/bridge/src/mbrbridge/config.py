"""Bridge run configuration."""

from __future__ import annotations

from dataclasses import dataclass


class BridgeError(ValueError):
    """Configuration or scoring failure the caller must fix."""


@dataclass(frozen=True)
class BridgeConfig:
    """Models and batching for one export run.

    ``scorer`` picks the pairwise backend: "bertscore" (greedy token matching
    over hidden states; ``layer`` selects which, default last) or "bleurt"
    (a sequence-pair regression head). ``rescale`` applies
    (s - b) / (1 - b) with ``rescale_baseline`` as b and is recorded in the
    exported ``kind`` tag either way.
    """

    scorer: str = "bertscore"
    scorer_model: str = "roberta-large"
    embedder_model: str = "sentence-transformers/all-mpnet-base-v2"
    batch_size: int = 16
    device: str = "cpu"
    rescale: bool = False
    rescale_baseline: float | None = None
    layer: int | None = None
    max_length: int = 256

    def __post_init__(self):
        if self.scorer not in ("bertscore", "bleurt"):
            raise BridgeError(f"unknown scorer {self.scorer!r}")
        if not self.scorer_model or not self.embedder_model:
            raise BridgeError("scorer and embedder model identifiers must be non-empty")
        if self.batch_size < 1:
            raise BridgeError("batch size must be >= 1")
        if self.rescale and self.rescale_baseline is None:
            raise BridgeError("rescale=True needs rescale_baseline")

    def matrix_kind(self) -> str:
        if self.scorer == "bertscore":
            layer = "last" if self.layer is None else str(self.layer)
            return f"external:bertscore:{self.scorer_model}:layer={layer}:rescale={self.rescale}"
        return f"external:bleurt:{self.scorer_model}:rescale={self.rescale}"
