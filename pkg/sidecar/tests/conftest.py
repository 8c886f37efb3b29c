from __future__ import annotations

import os
import threading
import time

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")
os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

import pytest
import torch
import yaml
from tokenizers import Tokenizer, decoders, models, pre_tokenizers
from transformers import (
    BertConfig,
    BertModel,
    GPT2Config,
    GPT2LMHeadModel,
    PreTrainedTokenizerFast,
)

from longsumm_sidecar.registry import load_registry
from longsumm_sidecar.service import create_app

VOCAB_WORDS = [
    "[UNK]", "[PAD]",
    "Summarise", "the", "following", "text.", "###", "Text:", "Summary:",
    "This", "is", "a", "tiny", "document", "about", "regulations", "and",
    "articles", "of", "law.", "it", "covers", "several", "provisions",
    "first", "second", "third", "sentence", "for", "embedding.", "closes",
    "batch.", "One.", "Two.", "Three.",
] + [f"word{i}" for i in range(80)]


def build_word_tokenizer() -> PreTrainedTokenizerFast:
    vocab = {word: i for i, word in enumerate(VOCAB_WORDS)}
    tokenizer = Tokenizer(models.WordLevel(vocab, unk_token="[UNK]"))
    tokenizer.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    tokenizer.decoder = decoders.WordPiece(prefix="##", cleanup=False)
    return PreTrainedTokenizerFast(
        tokenizer_object=tokenizer, unk_token="[UNK]", pad_token="[PAD]"
    )


@pytest.fixture(scope="session")
def checkpoints(tmp_path_factory):
    """Tiny randomly initialized checkpoints, built once per session."""
    root = tmp_path_factory.mktemp("checkpoints")
    tokenizer = build_word_tokenizer()

    encoder_dir = root / "tiny-encoder"
    torch.manual_seed(1234)
    encoder = BertModel(
        BertConfig(
            vocab_size=len(VOCAB_WORDS),
            hidden_size=16,
            num_hidden_layers=1,
            num_attention_heads=2,
            intermediate_size=32,
            max_position_embeddings=512,
        )
    )
    encoder.save_pretrained(encoder_dir)
    tokenizer.save_pretrained(encoder_dir)

    decoder_dir = root / "tiny-decoder"
    torch.manual_seed(5678)
    decoder = GPT2LMHeadModel(
        GPT2Config(
            vocab_size=len(VOCAB_WORDS),
            n_positions=256,
            n_embd=16,
            n_layer=1,
            n_head=2,
            bos_token_id=1,
            eos_token_id=1,
        )
    )
    decoder.save_pretrained(decoder_dir)
    tokenizer.save_pretrained(decoder_dir)

    return {"encoder": str(encoder_dir), "decoder": str(decoder_dir)}


@pytest.fixture(scope="session")
def registry_path(checkpoints, tmp_path_factory):
    registry = {
        "models": [
            {
                "model_id": "tiny-encoder",
                "checkpoint": checkpoints["encoder"],
                "role": "extractive",
                "architecture": "encoder",
                "context_length": 512,
                "tokenizer_id": "tiny-words",
                "pooling": "mean",
            },
            {
                "model_id": "tiny-encoder-cls",
                "checkpoint": checkpoints["encoder"],
                "role": "extractive",
                "architecture": "encoder",
                "context_length": 512,
                "tokenizer_id": "tiny-words",
                "pooling": "cls",
            },
            {
                "model_id": "tiny-decoder",
                "checkpoint": checkpoints["decoder"],
                "role": "abstractive",
                "architecture": "decoder-only",
                "context_length": 256,
                "tokenizer_id": "tiny-words",
                "reserved_generation_tokens": 32,
                "prompt_template": "llama3-instruct",
            },
        ]
    }
    path = tmp_path_factory.mktemp("registry") / "registry.yaml"
    path.write_text(yaml.safe_dump(registry))
    return path


@pytest.fixture(scope="session")
def entries(registry_path):
    return load_registry(registry_path)


@pytest.fixture(scope="session")
def app(entries):
    return create_app(entries, preload=True)


@pytest.fixture(scope="session")
def live_server(app):
    import uvicorn

    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 20
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("uvicorn did not start in time")
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=10)
