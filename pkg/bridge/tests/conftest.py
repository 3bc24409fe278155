"""Tiny randomly initialized local models: the full pipeline runs offline.

Format and index-order contracts hold for any model; only statements about
semantic quality need pretrained weights (those tests are skipped unless
BRIDGE_REAL_MODEL is set).
"""

import json
import os

import pytest
import torch
from tokenizers import Tokenizer
from tokenizers.models import WordPiece
from tokenizers.pre_tokenizers import Whitespace
from tokenizers.processors import TemplateProcessing
from transformers import BertConfig, BertForSequenceClassification, BertModel, PreTrainedTokenizerFast

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_VERBOSITY", "error")

VOCAB = (
    ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    + list("abcdefghijklmnopqrstuvwxyz")
    + [str(i) for i in range(10)]
)


def _tiny_tokenizer(directory) -> PreTrainedTokenizerFast:
    vocab = {t: i for i, t in enumerate(VOCAB)}
    tk = Tokenizer(WordPiece(vocab=vocab, unk_token="[UNK]"))
    tk.pre_tokenizer = Whitespace()
    tk.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    tk.save(str(directory / "tokenizer.json"))
    return PreTrainedTokenizerFast(
        tokenizer_file=str(directory / "tokenizer.json"),
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )


def _tiny_config(**extra):
    return BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=128,
        **extra,
    )


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("tiny-encoder")
    tokenizer = _tiny_tokenizer(d)
    torch.manual_seed(1234)
    model = BertModel(_tiny_config())
    tokenizer.save_pretrained(d)
    model.save_pretrained(d)
    return str(d)


@pytest.fixture(scope="session")
def tiny_pair_model_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("tiny-pair")
    tokenizer = _tiny_tokenizer(d)
    torch.manual_seed(4321)
    model = BertForSequenceClassification(_tiny_config(num_labels=1))
    tokenizer.save_pretrained(d)
    model.save_pretrained(d)
    return str(d)


def write_corpus(path, spaces):
    """spaces: list of (id, [texts])."""
    with open(path, "w", encoding="utf-8") as fh:
        for space_id, texts in spaces:
            record = {
                "id": space_id,
                "context": "ctx",
                "candidates": [{"text": t} for t in texts],
            }
            fh.write(json.dumps(record) + "\n")
    return path


@pytest.fixture
def ten_space_corpus(tmp_path):
    # letter-token texts keep the tiny wordpiece vocabulary happy
    spaces = []
    words = ["a b c", "c b a", "a a b", "b c d e", "e d c", "f g", "g f e", "h i j", "j i", "k l m"]
    for k in range(10):
        texts = [words[(k + i) % len(words)] for i in range(4)]
        spaces.append((f"s{k}", texts))
    return write_corpus(tmp_path / "corpus.jsonl", spaces)
