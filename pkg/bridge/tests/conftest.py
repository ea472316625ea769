import json
import os
from pathlib import Path

import pytest

# the bridge runs fully offline in tests; a tiny local checkpoint stands in
# for a hub-hosted one
os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "a", "cat", "cats", "dog", "dogs", "bird", "birds",
    "sleeps", "sleep", "runs", "run", "sings", "sing",
    "he", "she", "they", "it", "on", "mat", "tree", "in", "garden",
    "what", "where", "who", "is", "yes", "no", ".", ",", "?",
]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory) -> str:
    """A from-scratch masked LM small enough to run masked scoring in tests."""
    import torch
    from transformers import BertConfig, BertForMaskedLM, BertTokenizerFast

    root = tmp_path_factory.mktemp("checkpoint")
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB), encoding="utf-8")
    tokenizer = BertTokenizerFast(str(vocab_file), do_lower_case=True)
    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    model = BertForMaskedLM(config)
    target = root / "tiny-mlm"
    model.save_pretrained(target)
    tokenizer.save_pretrained(target)
    return str(target)


@pytest.fixture
def pairs_file(tmp_path) -> Path:
    pairs = [
        {"pair_id": "p1", "phenomenon": "sv_agreement", "good": "the cat sleeps .",
         "bad": "the cat sleep .", "language": "en"},
        {"pair_id": "p2", "phenomenon": "sv_agreement", "good": "dogs run .",
         "bad": "dogs runs .", "language": "en"},
        {"pair_id": "p3", "phenomenon": "number", "good": "birds sing .",
         "bad": "birds sings .", "language": "en"},
    ]
    path = tmp_path / "pairs.jsonl"
    path.write_text("\n".join(json.dumps(p) for p in pairs) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def squad_file(tmp_path) -> Path:
    payload = {
        "version": "1.1",
        "data": [
            {
                "title": "t",
                "paragraphs": [
                    {
                        "context": "the cat sleeps on the mat .",
                        "qas": [
                            {"id": "q1", "question": "who sleeps ?",
                             "answers": [{"text": "the cat", "answer_start": 0}]},
                            {"id": "q2", "question": "where ?",
                             "answers": [{"text": "mat", "answer_start": 22}]},
                        ],
                    },
                    {
                        "context": "dogs run in the garden .",
                        "qas": [
                            {"id": "q3", "question": "who runs ?",
                             "answers": [{"text": "dogs", "answer_start": 0}]},
                        ],
                    },
                ],
            }
        ],
    }
    path = tmp_path / "qa.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


@pytest.fixture
def nli_file(tmp_path) -> Path:
    rows = [
        {"id": "n1", "premise": "the cat sleeps .", "hypothesis": "a cat sleeps ."},
        {"id": "n2", "premise": "dogs run .", "hypothesis": "birds sing ."},
    ]
    path = tmp_path / "nli.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    return path
