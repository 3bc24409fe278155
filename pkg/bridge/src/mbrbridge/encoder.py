"""Batched transformer encoding: per-token states and pooled sentence vectors."""

from __future__ import annotations

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .config import BridgeError


def _oom_hint(exc: RuntimeError) -> BridgeError:
    if "out of memory" in str(exc).lower():
        return BridgeError("scoring ran out of memory; reduce --batch-size")
    raise exc


class Encoder:
    """One loaded model + tokenizer, evaluated without gradients."""

    def __init__(self, model_id: str, device: str = "cpu", max_length: int = 256):
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModel.from_pretrained(model_id)
        except Exception as exc:
            raise BridgeError(f"cannot load model {model_id!r}: {exc}") from exc
        self.device = torch.device(device)
        self.model.to(self.device)
        self.model.eval()
        self.max_length = max_length

    def _encode_batch(self, texts: list[str]):
        enc = self.tokenizer(
            texts,
            return_tensors="pt",
            padding=True,
            truncation=True,
            max_length=self.max_length,
        )
        enc = {k: v.to(self.device) for k, v in enc.items()}
        try:
            with torch.no_grad():
                out = self.model(**enc, output_hidden_states=True)
        except RuntimeError as exc:
            raise _oom_hint(exc) from exc
        return enc, out

    def token_states(self, texts: list[str], layer: int | None, batch_size: int) -> list[np.ndarray]:
        """Hidden states per text at ``layer`` (None = last), special tokens dropped."""
        states: list[np.ndarray] = []
        for start in range(0, len(texts), batch_size):
            batch = texts[start : start + batch_size]
            enc, out = self._encode_batch(batch)
            hidden = out.hidden_states[-1 if layer is None else layer]
            mask = enc["attention_mask"].bool()
            ids = enc["input_ids"]
            special = torch.zeros_like(mask)
            for tok_id in self.tokenizer.all_special_ids:
                special |= ids == tok_id
            keep = mask & ~special
            for row in range(hidden.shape[0]):
                states.append(hidden[row][keep[row]].cpu().numpy().astype(np.float64))
        return states

    def sentence_embeddings(self, texts: list[str], batch_size: int) -> np.ndarray:
        """Attention-masked mean pooling over the last layer, L2-normalized."""
        pooled: list[np.ndarray] = []
        for start in range(0, len(texts), batch_size):
            batch = texts[start : start + batch_size]
            enc, out = self._encode_batch(batch)
            hidden = out.hidden_states[-1]
            mask = enc["attention_mask"].unsqueeze(-1).to(hidden.dtype)
            summed = (hidden * mask).sum(dim=1)
            counts = mask.sum(dim=1).clamp(min=1.0)
            pooled.append((summed / counts).cpu().numpy().astype(np.float64))
        vectors = np.vstack(pooled)
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        if (norms == 0).any():
            raise BridgeError("embedder produced a zero-norm sentence vector")
        return (vectors / norms).astype(np.float32)
