"""Model profiles, generation requests, and the shared generation path."""

from __future__ import annotations

from dataclasses import dataclass

from longsumm.backends.errors import ContextOverflowError

ROLES = ("extractive", "abstractive")
ARCHITECTURES = ("encoder", "encoder-decoder", "decoder-only")
PROMPT_TEMPLATES = ("plain", "llama3-instruct")

# Instruction wrapper used for decoder-only summarization; no exemplary
# summary follows the marker at prediction time.
LLAMA3_TEMPLATE = "Summarise the following text.\n### Text:\n{text}\n### Summary:\n"
SUMMARY_MARKER = "### Summary:"


@dataclass(frozen=True)
class ModelProfile:
    """A backend model's identity, role, and context budget."""

    model_id: str
    role: str
    context_length: int
    architecture: str
    tokenizer_id: str
    reserved_generation_tokens: int = 1500

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}, expected one of {ROLES}")
        if self.architecture not in ARCHITECTURES:
            raise ValueError(
                f"unknown architecture {self.architecture!r}, expected one of {ARCHITECTURES}"
            )
        if self.context_length < 1:
            raise ValueError(f"context length must be >= 1, got {self.context_length}")

    def input_budget(self) -> int:
        """Token budget for input text.

        Decoder-only models share the context window between the prompt and
        the generated summary, so the reservation is subtracted; for other
        architectures the full context length is available.
        """
        if self.architecture == "decoder-only":
            return self.context_length - self.reserved_generation_tokens
        return self.context_length

    def default_prompt_template(self) -> str:
        return "llama3-instruct" if self.architecture == "decoder-only" else "plain"

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "role": self.role,
            "context_length": self.context_length,
            "architecture": self.architecture,
            "tokenizer_id": self.tokenizer_id,
            "reserved_generation_tokens": self.reserved_generation_tokens,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelProfile":
        return cls(
            model_id=data["model_id"],
            role=data["role"],
            context_length=int(data["context_length"]),
            architecture=data["architecture"],
            tokenizer_id=data["tokenizer_id"],
            reserved_generation_tokens=int(data.get("reserved_generation_tokens", 1500)),
        )


@dataclass
class GenerationRequest:
    """One abstractive generation call."""

    model_id: str
    input_text: str
    max_new_tokens: int = 1500
    prompt_template: str = "plain"

    def __post_init__(self) -> None:
        if self.max_new_tokens < 1:
            raise ValueError(f"max_new_tokens must be >= 1, got {self.max_new_tokens}")
        if self.prompt_template not in PROMPT_TEMPLATES:
            raise ValueError(
                f"unknown prompt template {self.prompt_template!r}, "
                f"expected one of {PROMPT_TEMPLATES}"
            )


def build_prompt(req: GenerationRequest) -> str:
    """Render the wire-level prompt for a request."""
    if req.prompt_template == "llama3-instruct":
        return LLAMA3_TEMPLATE.format(text=req.input_text)
    return req.input_text


def extract_summary(raw: str) -> str:
    """Text after the instruction marker, if the service left it in place."""
    if SUMMARY_MARKER in raw:
        raw = raw.split(SUMMARY_MARKER, 1)[1]
    return raw.strip()


def run_generation(backend, req: GenerationRequest) -> str:
    """Template, budget-check, call, and post-process one generation.

    The input must fit the model: for decoder-only models the input tokens
    plus ``max_new_tokens`` must be within the context length, otherwise the
    input alone must be. Overflow raises instead of silently truncating;
    fitting the input is the pipeline's job.
    """
    profile = backend.profile(req.model_id)
    input_tokens = backend.count_tokens(profile.tokenizer_id, req.input_text)
    if profile.architecture == "decoder-only":
        if input_tokens + req.max_new_tokens > profile.context_length:
            raise ContextOverflowError(
                f"{input_tokens} input + {req.max_new_tokens} new tokens exceed "
                f"context length {profile.context_length} of {profile.model_id!r}"
            )
    elif input_tokens > profile.context_length:
        raise ContextOverflowError(
            f"{input_tokens} input tokens exceed context length "
            f"{profile.context_length} of {profile.model_id!r}"
        )
    raw = backend.generate_text(req.model_id, build_prompt(req), req.max_new_tokens)
    return extract_summary(raw)
