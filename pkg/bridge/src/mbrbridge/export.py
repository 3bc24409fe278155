"""Export entry points: one matrix or embedding file pair per outcome space."""

from __future__ import annotations

from pathlib import Path

from .config import BridgeConfig
from .corpus_io import read_corpus
from .encoder import Encoder
from .formats import write_embeddings, write_matrix
from .scoring import bertscore_matrix, pair_regression_matrix, rescale_scores


def export_utility_matrices(corpus_path: str | Path, config: BridgeConfig, out_dir: str | Path) -> list[Path]:
    """Score every space and write ``<out_dir>/<space_id>.umat.{json,bin}``."""
    spaces = read_corpus(corpus_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kind = config.matrix_kind()
    stems: list[Path] = []
    if config.scorer == "bertscore":
        encoder = Encoder(config.scorer_model, device=config.device, max_length=config.max_length)
        for space_id, texts in spaces:
            states = encoder.token_states(texts, layer=config.layer, batch_size=config.batch_size)
            values = bertscore_matrix(states)
            if config.rescale:
                values = rescale_scores(values, config.rescale_baseline)
            stem = out_dir / space_id
            write_matrix(values, kind, stem)
            stems.append(stem)
    else:
        for space_id, texts in spaces:
            values = pair_regression_matrix(
                config.scorer_model,
                texts,
                device=config.device,
                batch_size=config.batch_size,
                max_length=config.max_length,
            )
            if config.rescale:
                values = rescale_scores(values, config.rescale_baseline)
            stem = out_dir / space_id
            write_matrix(values, kind, stem)
            stems.append(stem)
    return stems


def export_embeddings(corpus_path: str | Path, config: BridgeConfig, out_dir: str | Path) -> list[Path]:
    """Embed every space and write ``<out_dir>/<space_id>.emb.{json,bin}``."""
    spaces = read_corpus(corpus_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    encoder = Encoder(config.embedder_model, device=config.device, max_length=config.max_length)
    stems: list[Path] = []
    for space_id, texts in spaces:
        vectors = encoder.sentence_embeddings(texts, batch_size=config.batch_size)
        stem = out_dir / space_id
        write_embeddings(vectors, normalized=True, stem=stem)
        stems.append(stem)
    return stems
