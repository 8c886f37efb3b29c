"""FastAPI service implementing the /v1 wire protocol over transformers."""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass

import torch
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from longsumm_sidecar.registry import SidecarModelEntry

log = logging.getLogger(__name__)

# Instruction wrapper for decoder-only summarization; generation continues
# after the final marker and everything up to it is stripped from the output.
INSTRUCT_TEMPLATE = "Summarise the following text.\n### Text:\n{text}\n### Summary:\n"
SUMMARY_MARKER = "### Summary:"


class UnknownModel(Exception):
    def __init__(self, model_id: str, available: list[str]):
        super().__init__(model_id)
        self.model_id = model_id
        self.available = available


class ModelLoading(Exception):
    pass


class CountTokensRequest(BaseModel):
    model: str
    text: str


class EmbedRequest(BaseModel):
    model: str
    texts: list[str]


class GenerateRequest(BaseModel):
    model: str
    prompt: str
    max_new_tokens: int = 1500
    sample: bool = False
    seed: int | None = None


def apply_instruct_template(prompt: str) -> str:
    """Wrap a raw prompt unless the caller already templated it."""
    if SUMMARY_MARKER in prompt:
        return prompt
    return INSTRUCT_TEMPLATE.format(text=prompt)


@dataclass
class LoadedModel:
    entry: SidecarModelEntry
    tokenizer: object
    model: object


def _checkpoint_max_positions(config) -> int | None:
    for attribute in ("max_position_embeddings", "n_positions"):
        value = getattr(config, attribute, None)
        if isinstance(value, int) and value > 0:
            return value
    return None


def _load_checkpoint(entry: SidecarModelEntry) -> LoadedModel:
    from transformers import (
        AutoModel,
        AutoModelForCausalLM,
        AutoModelForSeq2SeqLM,
        AutoTokenizer,
    )

    log.info("loading %s from %s", entry.model_id, entry.checkpoint)
    tokenizer = AutoTokenizer.from_pretrained(entry.checkpoint)
    if entry.architecture == "encoder":
        model = AutoModel.from_pretrained(entry.checkpoint)
    elif entry.architecture == "encoder-decoder":
        model = AutoModelForSeq2SeqLM.from_pretrained(entry.checkpoint)
    else:
        model = AutoModelForCausalLM.from_pretrained(entry.checkpoint)
    model.eval()
    configured = _checkpoint_max_positions(model.config)
    if configured is not None and entry.context_length > configured:
        raise ValueError(
            f"{entry.model_id}: declared context_length {entry.context_length} exceeds "
            f"the checkpoint's configured maximum {configured}"
        )
    return LoadedModel(entry=entry, tokenizer=tokenizer, model=model)


class ModelPool:
    """Lazily loaded models with per-model load locks.

    A request for a model that another request is currently loading gets a
    503 instead of queueing behind a potentially long load. Forward passes
    are serialized per model.
    """

    def __init__(self, entries: list[SidecarModelEntry]):
        self.entries = {entry.model_id: entry for entry in entries}
        self._loaded: dict[str, LoadedModel] = {}
        self._load_locks = {model_id: threading.Lock() for model_id in self.entries}
        self._run_locks = {model_id: threading.Lock() for model_id in self.entries}

    def available(self) -> list[str]:
        return list(self.entries)

    def entry(self, model_id: str) -> SidecarModelEntry:
        entry = self.entries.get(model_id)
        if entry is None:
            raise UnknownModel(model_id, self.available())
        return entry

    def resolve_counting_model(self, name: str) -> str:
        if name in self.entries:
            return name
        for entry in self.entries.values():
            if entry.tokenizer_id == name:
                return entry.model_id
        raise UnknownModel(name, self.available())

    def get(self, model_id: str) -> LoadedModel:
        entry = self.entry(model_id)
        loaded = self._loaded.get(model_id)
        if loaded is not None:
            return loaded
        lock = self._load_locks[model_id]
        if not lock.acquire(blocking=False):
            raise ModelLoading(model_id)
        try:
            if model_id not in self._loaded:
                self._loaded[model_id] = _load_checkpoint(entry)
            return self._loaded[model_id]
        finally:
            lock.release()

    def run_lock(self, model_id: str) -> threading.Lock:
        return self._run_locks[model_id]

    def preload(self) -> None:
        for model_id in self.entries:
            self.get(model_id)


def _mean_pool(hidden: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    expanded = mask.unsqueeze(-1).to(hidden.dtype)
    summed = (hidden * expanded).sum(dim=1)
    counts = expanded.sum(dim=1).clamp(min=1.0)
    return summed / counts


def create_app(entries: list[SidecarModelEntry], preload: bool = False) -> FastAPI:
    app = FastAPI(title="longsumm sidecar")
    pool = ModelPool(entries)
    app.state.pool = pool
    if preload:
        pool.preload()

    @app.exception_handler(UnknownModel)
    async def unknown_model_handler(request: Request, exc: UnknownModel):
        return JSONResponse(
            status_code=404,
            content={
                "error": f"unknown model {exc.model_id!r}",
                "available_models": exc.available,
            },
        )

    @app.exception_handler(ModelLoading)
    async def model_loading_handler(request: Request, exc: ModelLoading):
        return JSONResponse(
            status_code=503, content={"error": f"model {exc} is loading, retry shortly"}
        )

    @app.get("/v1/models")
    def list_models() -> dict:
        return {"profiles": [entry.profile_dict() for entry in pool.entries.values()]}

    @app.post("/v1/count_tokens")
    def count_tokens(body: CountTokensRequest) -> dict:
        model_id = pool.resolve_counting_model(body.model)
        loaded = pool.get(model_id)
        ids = loaded.tokenizer.encode(body.text, add_special_tokens=False)
        return {"count": len(ids)}

    @app.post("/v1/embed")
    def embed(body: EmbedRequest) -> JSONResponse:
        if not body.texts:
            return JSONResponse(status_code=422, content={"error": "texts must be non-empty"})
        if any(not text for text in body.texts):
            return JSONResponse(
                status_code=422, content={"error": "texts must not contain empty strings"}
            )
        loaded = pool.get(body.model)
        entry = loaded.entry
        if entry.role != "extractive":
            return JSONResponse(
                status_code=422,
                content={"error": f"model {entry.model_id!r} does not serve embeddings"},
            )
        encoded = loaded.tokenizer(
            body.texts,
            return_tensors="pt",
            padding=True,
            truncation=True,
            max_length=entry.context_length,
        )
        with pool.run_lock(body.model), torch.no_grad():
            output = loaded.model(**encoded)
        hidden = output.last_hidden_state
        if entry.pooling == "cls":
            vectors = hidden[:, 0, :]
        else:
            vectors = _mean_pool(hidden, encoded["attention_mask"])
        matrix = [[float(x) for x in row] for row in vectors]
        return JSONResponse(content={"vectors": matrix, "dim": len(matrix[0])})

    @app.post("/v1/generate")
    def generate(body: GenerateRequest) -> JSONResponse:
        loaded = pool.get(body.model)
        entry = loaded.entry
        if entry.role != "abstractive":
            return JSONResponse(
                status_code=422,
                content={"error": f"model {entry.model_id!r} does not serve generation"},
            )
        if body.max_new_tokens < 1:
            return JSONResponse(
                status_code=422, content={"error": "max_new_tokens must be >= 1"}
            )
        if body.sample and body.seed is None:
            return JSONResponse(
                status_code=422, content={"error": "sampling requires an explicit seed"}
            )
        prompt = body.prompt
        if entry.prompt_template == "llama3-instruct":
            prompt = apply_instruct_template(prompt)
        # keep the prompt inside the window the checkpoint can actually attend to
        if entry.architecture == "decoder-only":
            prompt_budget = max(1, entry.context_length - body.max_new_tokens)
        else:
            prompt_budget = entry.context_length
        encoded = loaded.tokenizer(
            prompt,
            return_tensors="pt",
            truncation=True,
            max_length=prompt_budget,
            add_special_tokens=False,
        )
        generation_kwargs = {
            "max_new_tokens": body.max_new_tokens,
            "do_sample": body.sample,
            "pad_token_id": loaded.tokenizer.pad_token_id
            or loaded.tokenizer.eos_token_id
            or 0,
        }
        with pool.run_lock(body.model), torch.no_grad():
            if body.sample:
                torch.manual_seed(body.seed)
            output_ids = loaded.model.generate(**encoded, **generation_kwargs)
        if entry.architecture == "decoder-only":
            # decode only the continuation: everything up to and including the
            # instruction marker stays out of the response
            new_ids = output_ids[0][encoded["input_ids"].shape[1]:]
        else:
            new_ids = output_ids[0]
        text = loaded.tokenizer.decode(new_ids, skip_special_tokens=True)
        if SUMMARY_MARKER in text:
            text = text.split(SUMMARY_MARKER, 1)[1]
        return JSONResponse(content={"text": text.strip()})

    @app.post("/v1/score")
    def score() -> JSONResponse:
        return JSONResponse(
            status_code=501, content={"error": "reserved endpoint, not implemented"}
        )

    return app
