"""Corpus ingestion, length statistics, and outlier filtering.

Document-summary pairs are read from a JSONL file (one record per line with
``id``, ``reference``, ``summary`` and ``split`` fields) or from a directory
of per-split text-pair files. Documents whose reference word count is more
than two standard deviations above the corpus mean are treated as length
outliers and can be filtered from every split.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "SPLITS",
    "DocumentPair",
    "CorpusStats",
    "CorpusFormatError",
    "load_corpus",
    "write_corpus_jsonl",
    "word_count",
    "compute_stats",
    "filter_outliers",
    "stats_report",
]

SPLITS = ("train", "validation", "test")

_REQUIRED_FIELDS = ("id", "reference", "summary", "split")


class CorpusFormatError(ValueError):
    """A corpus file violates the expected record schema."""


@dataclass(frozen=True)
class DocumentPair:
    """One source document and its gold summary."""

    id: str
    reference_text: str
    gold_summary: str
    split: str

    def __post_init__(self) -> None:
        if not self.reference_text:
            raise ValueError(f"document {self.id!r} has an empty reference text")
        if self.split not in SPLITS:
            raise ValueError(
                f"document {self.id!r} has split {self.split!r}, expected one of {SPLITS}"
            )


@dataclass(frozen=True)
class CorpusStats:
    """Word-count statistics and the derived outlier threshold."""

    count: int
    mean_words: float
    sd_words: float
    outlier_threshold_words: float


def word_count(text: str) -> int:
    """Number of maximal non-whitespace runs."""
    return len(text.split())


def _pair_from_record(record: dict, line_no: int, seen_ids: set[str]) -> DocumentPair:
    missing = [f for f in _REQUIRED_FIELDS if f not in record]
    if missing:
        raise CorpusFormatError(
            f"line {line_no}: record missing field(s) {', '.join(missing)}"
        )
    doc_id = str(record["id"])
    if doc_id in seen_ids:
        raise CorpusFormatError(f"line {line_no}: duplicate id {doc_id!r}")
    seen_ids.add(doc_id)
    try:
        return DocumentPair(
            id=doc_id,
            reference_text=record["reference"],
            gold_summary=record["summary"],
            split=record["split"],
        )
    except ValueError as exc:
        raise CorpusFormatError(f"line {line_no}: {exc}") from exc


def _load_jsonl(path: Path) -> list[DocumentPair]:
    pairs: list[DocumentPair] = []
    seen_ids: set[str] = set()
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
            pairs.append(_pair_from_record(record, line_no, seen_ids))
    return pairs


def _load_directory(path: Path) -> list[DocumentPair]:
    # layout: <split>/<id>.txt paired with <split>/<id>.summary.txt
    pairs: list[DocumentPair] = []
    seen_ids: set[str] = set()
    for split in SPLITS:
        split_dir = path / split
        if not split_dir.is_dir():
            continue
        for ref_path in sorted(split_dir.glob("*.txt")):
            if ref_path.name.endswith(".summary.txt"):
                continue
            doc_id = ref_path.stem
            summary_path = split_dir / f"{doc_id}.summary.txt"
            if not summary_path.is_file():
                raise CorpusFormatError(
                    f"{ref_path}: missing companion summary file {summary_path.name}"
                )
            if doc_id in seen_ids:
                raise CorpusFormatError(f"{ref_path}: duplicate id {doc_id!r}")
            seen_ids.add(doc_id)
            pairs.append(
                DocumentPair(
                    id=doc_id,
                    reference_text=ref_path.read_text(encoding="utf-8"),
                    gold_summary=summary_path.read_text(encoding="utf-8"),
                    split=split,
                )
            )
    return pairs


def load_corpus(path: str | Path, format: str = "jsonl") -> list[DocumentPair]:
    """Load document-summary pairs, preserving file order.

    ``format`` is ``"jsonl"`` or ``"directory"``. Malformed records raise
    :class:`CorpusFormatError` naming the offending line or file.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus path does not exist: {path}")
    if format == "jsonl":
        return _load_jsonl(path)
    if format == "directory":
        return _load_directory(path)
    raise ValueError(f"unknown corpus format {format!r}")


def write_corpus_jsonl(pairs: Iterable[DocumentPair], path: str | Path) -> int:
    """Write pairs in the canonical one-record-per-line interchange format."""
    n = 0
    with Path(path).open("w", encoding="utf-8") as handle:
        for pair in pairs:
            record = {
                "id": pair.id,
                "reference": pair.reference_text,
                "summary": pair.gold_summary,
                "split": pair.split,
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
            n += 1
    return n


def compute_stats(
    pairs: Sequence[DocumentPair], *, population_sd: bool = True
) -> CorpusStats:
    """Mean and standard deviation of reference word counts, plus threshold.

    The threshold is ``mean + 2 * sd``. Population SD by default; pass
    ``population_sd=False`` for the sample estimator.
    """
    if not pairs:
        raise ValueError("cannot compute statistics over an empty corpus")
    counts = [word_count(p.reference_text) for p in pairs]
    n = len(counts)
    mean = sum(counts) / n
    divisor = n if population_sd else max(n - 1, 1)
    variance = sum((c - mean) ** 2 for c in counts) / divisor
    sd = math.sqrt(variance)
    return CorpusStats(
        count=n,
        mean_words=mean,
        sd_words=sd,
        outlier_threshold_words=mean + 2.0 * sd,
    )


def filter_outliers(
    pairs: Sequence[DocumentPair], stats: CorpusStats
) -> tuple[list[DocumentPair], list[DocumentPair]]:
    """Partition pairs into (kept, removed) by the outlier threshold.

    A pair is removed iff its reference word count is strictly greater than
    ``stats.outlier_threshold_words``. Order is preserved on both sides.
    """
    kept: list[DocumentPair] = []
    removed: list[DocumentPair] = []
    for pair in pairs:
        if word_count(pair.reference_text) > stats.outlier_threshold_words:
            removed.append(pair)
        else:
            kept.append(pair)
    return kept, removed


def stats_report(stats: CorpusStats, removed: Sequence[DocumentPair]) -> dict:
    """JSON-ready stats report, as emitted by the ingest command."""
    return {
        "count": stats.count,
        "mean_words": stats.mean_words,
        "sd_words": stats.sd_words,
        "threshold": stats.outlier_threshold_words,
        "removed_ids": [p.id for p in removed],
    }
