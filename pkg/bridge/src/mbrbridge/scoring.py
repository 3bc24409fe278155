"""Pairwise neural scorers.

``bertscore_matrix`` implements greedy token matching over contextual token
embeddings: for candidate c against reference r, precision is the mean over
c's tokens of the best cosine match in r, recall the converse, and the score
their harmonic mean. ``pair_regression_matrix`` runs a sequence-pair
regression head (BLEURT-style) over all ordered pairs. Matrices store
score(candidate=row i, reference=column j); symmetrization, if wanted, is a
consumer-side transform.
"""

from __future__ import annotations

import numpy as np
import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from .config import BridgeError
from .encoder import _oom_hint


def _unit_rows(states: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(states, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return states / norms


def bertscore_matrix(token_states: list[np.ndarray]) -> np.ndarray:
    """Greedy-matching F1 for every ordered (candidate, reference) pair."""
    n = len(token_states)
    units = [_unit_rows(s) if len(s) else s for s in token_states]
    values = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(n):
            a, b = units[i], units[j]
            if len(a) == 0 or len(b) == 0:
                values[i, j] = 0.0
                continue
            sim = a @ b.T
            precision = float(sim.max(axis=1).mean())
            recall = float(sim.max(axis=0).mean())
            if precision + recall <= 0.0:
                values[i, j] = 0.0
            else:
                values[i, j] = 2.0 * precision * recall / (precision + recall)
    return values


def pair_regression_matrix(
    model_id: str,
    texts: list[str],
    device: str = "cpu",
    batch_size: int = 16,
    max_length: int = 256,
) -> np.ndarray:
    """Score all ordered (candidate, reference) pairs with a regression head."""
    try:
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModelForSequenceClassification.from_pretrained(model_id)
    except Exception as exc:
        raise BridgeError(f"cannot load pair-regression model {model_id!r}: {exc}") from exc
    dev = torch.device(device)
    model.to(dev)
    model.eval()
    n = len(texts)
    pairs = [(i, j) for i in range(n) for j in range(n)]
    values = np.zeros((n, n), dtype=np.float64)
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[start : start + batch_size]
        # regression convention: reference first, candidate second
        enc = tokenizer(
            [texts[j] for _, j in chunk],
            [texts[i] for i, _ in chunk],
            return_tensors="pt",
            padding=True,
            truncation=True,
            max_length=max_length,
        )
        enc = {k: v.to(dev) for k, v in enc.items()}
        try:
            with torch.no_grad():
                logits = model(**enc).logits
        except RuntimeError as exc:
            raise _oom_hint(exc) from exc
        scores = logits[:, 0].cpu().numpy().astype(np.float64)
        for (i, j), score in zip(chunk, scores):
            values[i, j] = score
    return values


def rescale_scores(values: np.ndarray, baseline: float) -> np.ndarray:
    if baseline >= 1.0:
        raise BridgeError(f"rescale baseline must be < 1, got {baseline}")
    return (values - baseline) / (1.0 - baseline)
