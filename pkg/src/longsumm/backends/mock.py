"""Deterministic in-process backends for hermetic tests and --mock runs.

Ships a word-count tokenizer, a char/4 tokenizer, a seeded hash embedder
(dim 16), an echo generator, and a lead-k generator, wired into a small
fleet of mock model profiles.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable

from longsumm import textseg
from longsumm.backends.errors import UnknownModelError
from longsumm.backends.profiles import (
    SUMMARY_MARKER,
    GenerationRequest,
    ModelProfile,
    run_generation,
)

__all__ = [
    "word_token_count",
    "char4_token_count",
    "HashEmbedder",
    "MockBackend",
    "default_mock_backend",
]


def word_token_count(text: str) -> int:
    return len(text.split())


def char4_token_count(text: str) -> int:
    # one token per 4 characters, at least one for non-empty text
    if not text:
        return 0
    return max(1, len(text) // 4)


class HashEmbedder:
    """Maps text to a fixed-dimension vector via a seeded content hash.

    Stateless apart from the seed: identical text always yields the identical
    vector, with components in [-1, 1].
    """

    def __init__(self, dim: int = 16, seed: int = 0):
        if dim < 1 or dim > 32:
            raise ValueError("hash embedder supports dimensions 1..32")
        self.dim = dim
        self.seed = seed

    def embed_one(self, text: str) -> list[float]:
        digest = hashlib.sha256(f"{self.seed}:{text}".encode("utf-8")).digest()
        return [
            int.from_bytes(digest[2 * i : 2 * i + 2], "big") / 65535.0 * 2.0 - 1.0
            for i in range(self.dim)
        ]

    def embed(self, texts: list[str]) -> list[list[float]]:
        return [self.embed_one(t) for t in texts]


def echo_generator(text: str, max_new_tokens: int) -> str:
    """First ``max_new_tokens`` whitespace tokens of the input."""
    return " ".join(text.split()[:max_new_tokens])


def make_lead_k_generator(k: int = 3) -> Callable[[str, int], str]:
    """Generator returning the first ``k`` sentences of the input."""

    def lead_k(text: str, max_new_tokens: int) -> str:
        sentences = textseg.segment_sentences(text)[:k]
        return " ".join(s.text for s in sentences)

    return lead_k


def _template_payload(prompt: str) -> str:
    # peel the instruct template a real decoder-only service would consume
    head = "### Text:\n"
    if head in prompt and SUMMARY_MARKER in prompt:
        body = prompt.split(head, 1)[1]
        return body.rsplit("\n" + SUMMARY_MARKER, 1)[0]
    return prompt


@dataclass
class _MockModel:
    profile: ModelProfile
    tokenizer: Callable[[str], int]
    embedder: HashEmbedder | None = None
    generator: Callable[[str, int], str] | None = None


class MockBackend:
    """In-process backend with the same surface as :class:`HttpBackend`."""

    def __init__(self) -> None:
        self._models: dict[str, _MockModel] = {}
        self._tokenizers: dict[str, Callable[[str], int]] = {}

    def add_model(
        self,
        profile: ModelProfile,
        tokenizer: Callable[[str], int],
        embedder: HashEmbedder | None = None,
        generator: Callable[[str, int], str] | None = None,
    ) -> None:
        self._models[profile.model_id] = _MockModel(profile, tokenizer, embedder, generator)
        self._tokenizers[profile.tokenizer_id] = tokenizer

    # -- protocol surface ------------------------------------------------

    def list_models(self) -> list[ModelProfile]:
        return [m.profile for m in self._models.values()]

    def profile(self, model_id: str) -> ModelProfile:
        return self._require(model_id).profile

    def count_tokens(self, name: str, text: str) -> int:
        """Count under a model id or a bare tokenizer id."""
        if name in self._models:
            return self._models[name].tokenizer(text)
        if name in self._tokenizers:
            return self._tokenizers[name](text)
        raise UnknownModelError(name, list(self._models) + list(self._tokenizers))

    def embed(self, model_id: str, texts: list[str]) -> list[list[float]]:
        model = self._require(model_id)
        if model.embedder is None:
            raise UnknownModelError(model_id, self._embedding_models())
        if not texts:
            raise ValueError("embed requires a non-empty list of texts")
        return model.embedder.embed(texts)

    def generate_text(self, model_id: str, prompt: str, max_new_tokens: int) -> str:
        model = self._require(model_id)
        if model.generator is None:
            raise UnknownModelError(model_id, self._generation_models())
        return model.generator(_template_payload(prompt), max_new_tokens)

    def generate(self, req: GenerationRequest) -> str:
        return run_generation(self, req)

    def token_count_fn(self) -> Callable[[str, str], int]:
        return lambda text, tokenizer_id: self.count_tokens(tokenizer_id, text)

    # -- helpers ----------------------------------------------------------

    def _require(self, model_id: str) -> _MockModel:
        model = self._models.get(model_id)
        if model is None:
            raise UnknownModelError(model_id, list(self._models))
        return model

    def _embedding_models(self) -> list[str]:
        return [mid for mid, m in self._models.items() if m.embedder is not None]

    def _generation_models(self) -> list[str]:
        return [mid for mid, m in self._models.items() if m.generator is not None]


def default_mock_backend(seed: int = 42, lead_sentences: int = 3) -> MockBackend:
    """The standard mock fleet used by tests and the --mock CLI flag."""
    backend = MockBackend()
    embedder = HashEmbedder(dim=16, seed=seed)
    backend.add_model(
        ModelProfile("mock-extractive", "extractive", 512, "encoder", "mock-words"),
        word_token_count,
        embedder=embedder,
    )
    backend.add_model(
        ModelProfile("mock-extractive-long", "extractive", 4096, "encoder", "mock-words"),
        word_token_count,
        embedder=embedder,
    )
    backend.add_model(
        ModelProfile("mock-abstractive", "abstractive", 1024, "encoder-decoder", "mock-words"),
        word_token_count,
        generator=make_lead_k_generator(lead_sentences),
    )
    backend.add_model(
        ModelProfile(
            "mock-abstractive-chars", "abstractive", 1024, "encoder-decoder", "mock-chars4"
        ),
        char4_token_count,
        generator=make_lead_k_generator(lead_sentences),
    )
    backend.add_model(
        ModelProfile("mock-decoder", "abstractive", 8192, "decoder-only", "mock-words"),
        word_token_count,
        generator=echo_generator,
    )
    return backend
