"""Model registry: which checkpoints to serve, and how."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

ROLES = ("extractive", "abstractive")
ARCHITECTURES = ("encoder", "encoder-decoder", "decoder-only")
POOLINGS = ("mean", "cls")
PROMPT_TEMPLATES = ("plain", "llama3-instruct")


@dataclass(frozen=True)
class SidecarModelEntry:
    """One served model: checkpoint, role, and protocol-facing metadata."""

    model_id: str
    checkpoint: str
    role: str
    architecture: str
    context_length: int
    tokenizer_id: str
    pooling: str = "mean"
    reserved_generation_tokens: int = 1500
    prompt_template: str = "plain"
    deterministic: bool = True  # greedy decoding; sampling requires a seed per request

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"{self.model_id}: unknown role {self.role!r}")
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"{self.model_id}: unknown architecture {self.architecture!r}")
        if self.pooling not in POOLINGS:
            raise ValueError(f"{self.model_id}: unknown pooling {self.pooling!r}")
        if self.prompt_template not in PROMPT_TEMPLATES:
            raise ValueError(
                f"{self.model_id}: unknown prompt template {self.prompt_template!r}"
            )
        if self.context_length < 1:
            raise ValueError(f"{self.model_id}: context_length must be >= 1")
        if self.role == "extractive" and self.architecture != "encoder":
            raise ValueError(f"{self.model_id}: extractive entries must be encoders")
        if self.role == "abstractive" and self.architecture == "encoder":
            raise ValueError(f"{self.model_id}: abstractive entries cannot be encoder-only")

    def profile_dict(self) -> dict:
        """The /v1/models wire representation.

        ``pooling`` is declared here so clients can record how sentence
        embeddings were produced; consumers that only know the base profile
        fields ignore it.
        """
        return {
            "model_id": self.model_id,
            "role": self.role,
            "context_length": self.context_length,
            "architecture": self.architecture,
            "tokenizer_id": self.tokenizer_id,
            "reserved_generation_tokens": self.reserved_generation_tokens,
            "pooling": self.pooling if self.role == "extractive" else None,
        }


def load_registry(path: str | Path) -> list[SidecarModelEntry]:
    """Read a YAML registry: ``models:`` followed by a list of entries."""
    with Path(path).open(encoding="utf-8") as handle:
        data = yaml.safe_load(handle) or {}
    entries = [SidecarModelEntry(**raw) for raw in data.get("models", [])]
    if not entries:
        raise ValueError(f"{path}: registry contains no models")
    seen: set[str] = set()
    for entry in entries:
        if entry.model_id in seen:
            raise ValueError(f"{path}: duplicate model_id {entry.model_id!r}")
        seen.add(entry.model_id)
    return entries
