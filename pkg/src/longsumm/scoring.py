"""ROUGE-1/2/L F-score computation and corpus aggregation.

Texts are normalized to lowercased alphanumeric token runs; no stemming and
no stopword removal, so scores are deterministic and directly comparable
across runs of this package (but not necessarily against other ROUGE
implementations with different normalization). ROUGE-N uses clipped n-gram
multiset overlap; ROUGE-L uses the longest common subsequence over the whole
token sequences.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Score",
    "ScoreReport",
    "tokenize",
    "rouge_n",
    "rouge_l",
    "score_pair",
    "score_run",
    "render_table",
]

# unicode alphanumeric runs, underscore excluded
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

METRIC_NAMES = ("rouge1_f", "rouge2_f", "rougeL_f")


@dataclass(frozen=True)
class Score:
    precision: float
    recall: float
    f1: float


_ZERO = Score(0.0, 0.0, 0.0)


def tokenize(text: str) -> list[str]:
    """Lowercased maximal alphanumeric runs."""
    return _TOKEN_RE.findall(text.lower())


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def rouge_n(candidate: str, reference: str, n: int) -> Score:
    """Clipped n-gram overlap precision/recall/F1.

    Zeros when either side has no n-grams (empty text or shorter than n).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cand_grams = _ngrams(tokenize(candidate), n)
    ref_grams = _ngrams(tokenize(reference), n)
    if not cand_grams or not ref_grams:
        return _ZERO
    overlap = sum((Counter(cand_grams) & Counter(ref_grams)).values())
    precision = overlap / len(cand_grams)
    recall = overlap / len(ref_grams)
    return Score(precision, recall, _f1(precision, recall))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # two-row dynamic program over the shorter sequence
    if len(b) > len(a):
        a, b = b, a
    if not b:
        return 0
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l(candidate: str, reference: str) -> Score:
    """LCS-based precision/recall/F1 over whole token sequences."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return _ZERO
    lcs = _lcs_length(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return Score(precision, recall, _f1(precision, recall))


def score_pair(candidate: str, reference: str) -> dict[str, float]:
    """F-scores for ROUGE-1, ROUGE-2 and ROUGE-L against one reference."""
    return {
        "rouge1_f": rouge_n(candidate, reference, 1).f1,
        "rouge2_f": rouge_n(candidate, reference, 2).f1,
        "rougeL_f": rouge_l(candidate, reference).f1,
    }


@dataclass(frozen=True)
class ScoreReport:
    """Per-document F-scores plus corpus-level arithmetic means."""

    config_label: str
    per_doc: dict[str, dict[str, float]]
    aggregate: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "config_label": self.config_label,
            "aggregate": self.aggregate,
            "per_doc": self.per_doc,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)


def score_run(
    summaries: Mapping[str, str] | Iterable[tuple[str, str]],
    pairs,
    config_label: str = "",
) -> ScoreReport:
    """Score generated summaries against their documents' gold summaries.

    ``summaries`` maps document id to final summary; ``pairs`` is the corpus
    they came from. Every summary id must have a matching pair.
    """
    items = dict(summaries)
    if not items:
        raise ValueError("no summaries to score")
    gold = {p.id: p.gold_summary for p in pairs}
    orphans = sorted(doc_id for doc_id in items if doc_id not in gold)
    if orphans:
        raise KeyError(f"no gold summary for document id(s): {', '.join(orphans)}")
    per_doc = {doc_id: score_pair(text, gold[doc_id]) for doc_id, text in items.items()}
    aggregate = {
        metric: sum(scores[metric] for scores in per_doc.values()) / len(per_doc)
        for metric in METRIC_NAMES
    }
    return ScoreReport(config_label=config_label, per_doc=per_doc, aggregate=aggregate)


def score_records(records, pairs) -> ScoreReport:
    """Score pipeline run records (``document_id``/``final_summary`` carriers).

    The report label is the records' shared configuration label, or "mixed"
    when record sets are combined.
    """
    records = list(records)
    if not records:
        raise ValueError("no run records to score")
    labels = {record.config_label for record in records}
    label = labels.pop() if len(labels) == 1 else "mixed"
    summaries = {record.document_id: record.final_summary for record in records}
    return score_run(summaries, pairs, config_label=label)


def render_table(reports: Sequence[ScoreReport]) -> str:
    """Aligned text table, one row per report, sorted by config label."""
    header = ("Configuration", "ROUGE-1", "ROUGE-2", "ROUGE-L")
    rows = [
        (
            report.config_label or "(unlabeled)",
            f"{report.aggregate['rouge1_f']:.4f}",
            f"{report.aggregate['rouge2_f']:.4f}",
            f"{report.aggregate['rougeL_f']:.4f}",
        )
        for report in sorted(reports, key=lambda r: r.config_label)
    ]
    widths = [max(len(row[i]) for row in [header, *rows]) for i in range(len(header))]
    lines = [
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(header)),
        "  ".join("-" * w for w in widths),
    ]
    lines.extend("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows)
    return "\n".join(lines)
