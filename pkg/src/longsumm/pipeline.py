"""End-to-end orchestration: plan, extract N times, fit, generate.

Document length is measured with the extractive model's tokenizer, the plan
is built against the abstractive model's input budget, and every extractive
step re-segments and re-chunks its input from scratch. Because the two
tokenizers disagree in general, the concatenated extract is re-counted with
the abstractive tokenizer and truncated to its budget before generation.

Every run produces a :class:`RunRecord` holding the plan, all intermediate
step results, token trajectories, and the final summary. Records serialize
to JSON; the canonical form excludes wall-clock timings so that identical
inputs yield byte-identical records.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from longsumm import planner, textseg
from longsumm.backends.profiles import GenerationRequest, ModelProfile
from longsumm.corpus import DocumentPair
from longsumm.extractor import DISTANCE_METRICS, ExtractionStepResult, extract_step
from longsumm.planner import CompressionPlan, RatioStrategy
from longsumm.textseg import CachedTokenCounter

log = logging.getLogger(__name__)

RECORD_VERSION = 1

TRUNCATION_POLICIES = ("drop-trailing-sentences", "hard-token-cut")

__all__ = [
    "RECORD_VERSION",
    "TRUNCATION_POLICIES",
    "PipelineConfig",
    "RunRecord",
    "BatchItem",
    "SummarizeError",
    "fit_to_context",
    "summarize",
    "run_batch",
    "write_records_jsonl",
    "read_records_jsonl",
]


class SummarizeError(RuntimeError):
    """A document failed mid-pipeline; carries whatever was produced so far."""

    def __init__(self, document_id: str, stage: str, cause: Exception, partial: dict):
        super().__init__(f"document {document_id!r} failed during {stage}: {cause}")
        self.document_id = document_id
        self.stage = stage
        self.cause = cause
        self.partial = partial


@dataclass
class PipelineConfig:
    """The (extractive model, ratio strategy, abstractive model) triple."""

    extractive_profile: ModelProfile
    abstractive_profile: ModelProfile
    strategy: RatioStrategy = field(default_factory=RatioStrategy)
    seed: int = 42
    global_budget_correction: bool = False
    truncation_policy: str = "drop-trailing-sentences"
    distance_metric: str = "euclidean"
    max_new_tokens: int = 1500

    def __post_init__(self) -> None:
        if self.extractive_profile.role != "extractive":
            raise ValueError(
                f"extractive profile {self.extractive_profile.model_id!r} has role "
                f"{self.extractive_profile.role!r}"
            )
        if self.abstractive_profile.role != "abstractive":
            raise ValueError(
                f"abstractive profile {self.abstractive_profile.model_id!r} has role "
                f"{self.abstractive_profile.role!r}"
            )
        if self.truncation_policy not in TRUNCATION_POLICIES:
            raise ValueError(
                f"unknown truncation policy {self.truncation_policy!r}, "
                f"expected one of {TRUNCATION_POLICIES}"
            )
        if self.distance_metric not in DISTANCE_METRICS:
            raise ValueError(
                f"unknown distance metric {self.distance_metric!r}, "
                f"expected one of {DISTANCE_METRICS}"
            )

    @property
    def config_label(self) -> str:
        return (
            f"{self.extractive_profile.model_id}/{self.strategy.kind}/"
            f"{self.abstractive_profile.model_id}"
        )


@dataclass
class RunRecord:
    """Full provenance for one summarized document."""

    document_id: str
    config_label: str
    plan: CompressionPlan
    steps: list[ExtractionStepResult]
    pre_abstractive_tokens_ext: int
    pre_abstractive_tokens_abs: int
    truncated_sentences: int
    final_summary: str
    empty_summary: bool = False
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_timings: bool = True) -> dict:
        record = {
            "record_version": RECORD_VERSION,
            "document_id": self.document_id,
            "config_label": self.config_label,
            "plan": self.plan.to_dict(),
            "steps": [
                {
                    "step_index": s.step_index,
                    "per_chunk_selected": s.per_chunk_selected,
                    "concatenated_text": s.concatenated_text,
                    "token_count": s.token_count,
                    "per_chunk_k": s.per_chunk_k,
                    "truncated_chunks": s.truncated_chunks,
                }
                for s in self.steps
            ],
            "pre_abstractive_tokens_ext": self.pre_abstractive_tokens_ext,
            "pre_abstractive_tokens_abs": self.pre_abstractive_tokens_abs,
            "truncated_sentences": self.truncated_sentences,
            "final_summary": self.final_summary,
            "empty_summary": self.empty_summary,
        }
        if include_timings:
            record["timings"] = self.timings
        return record

    def canonical_json(self) -> str:
        """Deterministic serialization: identical runs compare byte-equal."""
        return json.dumps(
            self.to_dict(include_timings=False),
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
        )

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        plan_data = data["plan"]
        plan = CompressionPlan(
            strategy=plan_data["strategy"],
            doc_length=plan_data["doc_tokens"],
            context_length=plan_data["context_length"],
            n_steps=plan_data["n_steps"],
            step_ratios=tuple(plan_data["ratios"]),
            degenerate_dependent=plan_data.get("degenerate_dependent", False),
        )
        steps = [
            ExtractionStepResult(
                step_index=s["step_index"],
                per_chunk_selected=s["per_chunk_selected"],
                concatenated_text=s["concatenated_text"],
                token_count=s["token_count"],
                per_chunk_k=s.get("per_chunk_k", []),
                truncated_chunks=s.get("truncated_chunks", 0),
            )
            for s in data["steps"]
        ]
        return cls(
            document_id=data["document_id"],
            config_label=data.get("config_label", ""),
            plan=plan,
            steps=steps,
            pre_abstractive_tokens_ext=data["pre_abstractive_tokens_ext"],
            pre_abstractive_tokens_abs=data["pre_abstractive_tokens_abs"],
            truncated_sentences=data["truncated_sentences"],
            final_summary=data["final_summary"],
            empty_summary=data.get("empty_summary", False),
            timings=data.get("timings", {}),
        )


def fit_to_context(
    text: str,
    profile: ModelProfile,
    counter: CachedTokenCounter,
    policy: str = "drop-trailing-sentences",
) -> tuple[str, int]:
    """Truncate ``text`` to the profile's input budget, counting with its tokenizer.

    ``drop-trailing-sentences`` removes whole sentences from the end until
    the text fits; ``hard-token-cut`` cuts at the token boundary. Returns
    the fitted text and the number of sentences dropped (for the hard cut, a
    partially kept final sentence counts as kept).
    """
    budget = profile.input_budget()
    if budget < 1:
        raise ValueError(
            f"profile {profile.model_id!r} has a non-positive input budget ({budget})"
        )
    tokenizer_id = profile.tokenizer_id
    if counter.count(text, tokenizer_id) <= budget:
        return text, 0
    sentences = textseg.segment_sentences(text)
    if policy == "hard-token-cut":
        cut = textseg.truncate_to_token_budget(text, budget, tokenizer_id, counter)
        return cut, len(sentences) - len(textseg.segment_sentences(cut))
    counts = [counter.count(s.text, tokenizer_id) for s in sentences]
    kept = 0
    running = 0
    for n in counts:
        if running + n > budget:
            break
        running += n
        kept += 1
    while kept > 0:
        fitted = " ".join(s.text for s in sentences[:kept])
        if counter.count(fitted, tokenizer_id) <= budget:
            return fitted, len(sentences) - kept
        kept -= 1
    return "", len(sentences)


def summarize(
    doc: DocumentPair,
    cfg: PipelineConfig,
    backend,
    counter: CachedTokenCounter | None = None,
) -> RunRecord:
    """Run the full extract-then-abstract pipeline on one document."""
    if counter is None:
        counter = CachedTokenCounter(backend.token_count_fn())
    ext = cfg.extractive_profile
    abs_profile = cfg.abstractive_profile
    timings: dict[str, float] = {}
    progress: dict = {"document_id": doc.id, "config_label": cfg.config_label}
    started = time.monotonic()

    def _fail(stage: str, cause: Exception) -> SummarizeError:
        return SummarizeError(doc.id, stage, cause, progress)

    try:
        doc_tokens = counter.count(doc.reference_text, ext.tokenizer_id)
        plan = planner.plan(doc_tokens, abs_profile.input_budget(), cfg.strategy)
        progress["plan"] = plan.to_dict()
        timings["plan"] = time.monotonic() - started
    except Exception as exc:
        raise _fail("planning", exc) from exc

    text = doc.reference_text
    steps: list[ExtractionStepResult] = []

    def embed(texts: list[str]):
        return backend.embed(ext.model_id, texts)

    for step_index, ratio in enumerate(plan.step_ratios):
        step_started = time.monotonic()
        try:
            sentences = textseg.segment_sentences(text)
            textseg.attach_token_counts(sentences, ext.tokenizer_id, counter)
            chunks = textseg.chunk_document(
                sentences, ext.context_length, ext.tokenizer_id, counter
            )
            result = extract_step(
                chunks,
                ratio,
                embed,
                cfg.seed,
                step_index=step_index,
                global_correction=cfg.global_budget_correction,
                metric=cfg.distance_metric,
                counter=counter,
                tokenizer_id=ext.tokenizer_id,
            )
        except Exception as exc:
            progress["steps_completed"] = len(steps)
            raise _fail(f"extractive step {step_index}", exc) from exc
        steps.append(result)
        text = result.concatenated_text
        timings[f"extract_{step_index}"] = time.monotonic() - step_started

    try:
        fit_started = time.monotonic()
        pre_ext = counter.count(text, ext.tokenizer_id)
        fitted, dropped = fit_to_context(text, abs_profile, counter, cfg.truncation_policy)
        pre_abs = counter.count(fitted, abs_profile.tokenizer_id)
        timings["fit"] = time.monotonic() - fit_started
    except Exception as exc:
        raise _fail("context fitting", exc) from exc

    try:
        generate_started = time.monotonic()
        request = GenerationRequest(
            model_id=abs_profile.model_id,
            input_text=fitted,
            max_new_tokens=cfg.max_new_tokens,
            prompt_template=abs_profile.default_prompt_template(),
        )
        final_summary = backend.generate(request)
        timings["generate"] = time.monotonic() - generate_started
    except Exception as exc:
        progress["pre_abstractive_tokens_abs"] = pre_abs
        raise _fail("generation", exc) from exc

    timings["total"] = time.monotonic() - started
    empty = not final_summary.strip()
    if empty:
        log.warning("document %s produced an empty summary", doc.id)
    return RunRecord(
        document_id=doc.id,
        config_label=cfg.config_label,
        plan=plan,
        steps=steps,
        pre_abstractive_tokens_ext=pre_ext,
        pre_abstractive_tokens_abs=pre_abs,
        truncated_sentences=dropped,
        final_summary=final_summary,
        empty_summary=empty,
        timings=timings,
    )


@dataclass
class BatchItem:
    """Outcome for one document in a batch: a record or an error."""

    document_id: str
    record: RunRecord | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.record is not None


def run_batch(
    pairs: Sequence[DocumentPair],
    cfg: PipelineConfig,
    backend,
    parallelism: int = 1,
) -> list[BatchItem]:
    """Summarize a batch; output order matches input order.

    Per-document failures are captured as failed items and the batch
    continues. Parallelism is document-level only; a shared token-count
    cache keeps repeated counts cheap across documents.
    """
    if parallelism < 1:
        raise ValueError(f"parallelism must be >= 1, got {parallelism}")
    counter = CachedTokenCounter(backend.token_count_fn())

    def run_one(pair: DocumentPair) -> BatchItem:
        try:
            return BatchItem(pair.id, record=summarize(pair, cfg, backend, counter))
        except SummarizeError as exc:
            log.error("batch item failed: %s", exc)
            return BatchItem(pair.id, error=str(exc))

    if parallelism == 1 or len(pairs) <= 1:
        return [run_one(pair) for pair in pairs]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(run_one, pairs))


def write_records_jsonl(items: Iterable[RunRecord | BatchItem], path: str | Path) -> int:
    """Write run records (skipping failed batch items) as JSONL."""
    n = 0
    with Path(path).open("w", encoding="utf-8") as handle:
        for item in items:
            record = item.record if isinstance(item, BatchItem) else item
            if record is None:
                continue
            handle.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
            n += 1
    return n


def read_records_jsonl(path: str | Path) -> list[RunRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(RunRecord.from_dict(json.loads(line)))
    return records
