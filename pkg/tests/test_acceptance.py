"""Acceptance suite: one test per release criterion.

Each criterion pins its tolerance explicitly. A summary line per criterion
is printed at the end of the run (see conftest). The corpus-filter check
against the real EUR-Lex-Sum English data is data-gated: it is skipped
unless EUR_LEX_SUM_JSONL points at the converted dataset.
"""

from __future__ import annotations

import os
import random
import time
from pathlib import Path

import pytest

from conftest import make_pair
from longsumm.backends import default_mock_backend
from longsumm.corpus import (
    DocumentPair,
    compute_stats,
    filter_outliers,
    load_corpus,
    word_count,
)
from longsumm.extractor import extract_step, kmeans
from longsumm.pipeline import PipelineConfig, summarize
from longsumm.planner import (
    RatioStrategy,
    plan_dependent,
    plan_fixed,
    plan_hybrid,
    simulate_cascade,
)
from longsumm.scoring import rouge_l, rouge_n, tokenize
from longsumm.textseg import Chunk, Sentence
from test_extractor import hash_embed
from test_scoring import oracle_lcs, oracle_ngram_overlap

CONTEXTS = (512, 1024, 4096, 8192, 16384)
RATIOS = tuple(i / 10 for i in range(1, 10))
DOC_STEP = 37
DOC_MAX = 100_000


def grid_points():
    for context in CONTEXTS:
        for doc in range(context + 1, DOC_MAX + 1, DOC_STEP):
            yield doc, context


def cascade_minimal_steps(doc: int, context: int, ratio: float) -> int:
    n = 0
    size = float(doc)
    while size > context:
        size *= ratio
        n += 1
    return n


def test_planner_matches_cascade_oracle_on_full_grid():
    started = time.monotonic()
    checked = 0
    for doc, context in grid_points():
        for ratio in RATIOS:
            expected = cascade_minimal_steps(doc, context, ratio)
            got = plan_fixed(doc, context, ratio).n_steps
            assert got == expected, (doc, context, ratio, got, expected)
            checked += 1
    elapsed = time.monotonic() - started
    assert checked > 100_000
    assert elapsed < 10.0, f"grid sweep took {elapsed:.1f}s, budget is 10s"


def test_planner_minimality_postcondition_on_full_grid():
    for doc, context in grid_points():
        for ratio in RATIOS:
            n = plan_fixed(doc, context, ratio).n_steps
            assert n >= 1  # every grid document exceeds the context
            size = float(doc)
            for _ in range(n - 1):
                size *= ratio
            assert size > context, (doc, context, ratio)
            assert size * ratio <= context, (doc, context, ratio)


def test_dependent_strategy_single_step_and_budget():
    # N <= 1 everywhere on the plan side
    for doc, context in grid_points():
        assert plan_dependent(doc, context).n_steps == 1
    for context in CONTEXTS:
        assert plan_dependent(context, context).n_steps == 0

    # and the executed pipeline lands within the abstractive budget
    backend = default_mock_backend()
    cfg = PipelineConfig(
        extractive_profile=backend.profile("mock-extractive"),
        abstractive_profile=backend.profile("mock-abstractive"),
        strategy=RatioStrategy("dependent"),
    )
    budget = backend.profile("mock-abstractive").input_budget()
    rng = random.Random(2024)
    within = 0
    for i in range(100):
        tokens = rng.randint(1_000, 50_000)
        record = summarize(make_pair(f"dep-{i}", tokens), cfg, backend)
        assert record.plan.n_steps <= 1
        if record.pre_abstractive_tokens_abs <= budget:
            within += 1
    assert within == 100


def test_hybrid_ideal_cascade_lands_on_context_on_full_grid():
    for doc, context in grid_points():
        for ratio in RATIOS:
            result = plan_hybrid(doc, context, ratio)
            final = simulate_cascade(doc, result.step_ratios)[-1]
            assert abs(final - context) <= 1e-9 * context, (doc, context, ratio, final)


def test_rouge_matches_bruteforce_oracles_exactly():
    vocab = [f"t{i}" for i in range(18)]
    rng = random.Random(99)
    for _ in range(1000):
        cand = " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 50)))
        ref = " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 50)))
        cand_tokens, ref_tokens = tokenize(cand), tokenize(ref)
        for n in (1, 2):
            got = rouge_n(cand, ref, n)
            want = oracle_ngram_overlap(cand_tokens, ref_tokens, n)
            assert (got.precision, got.recall, got.f1) == want
        got_l = rouge_l(cand, ref)
        if cand_tokens and ref_tokens:
            lcs = oracle_lcs(cand_tokens, ref_tokens)
            assert got_l.precision == lcs / len(cand_tokens)
            assert got_l.recall == lcs / len(ref_tokens)
        else:
            assert got_l == rouge_n("", "", 1)

    # hand-checked values, 4 decimal places
    assert rouge_n("the cat sat", "the cat sat on the mat", 1).f1 == pytest.approx(
        0.6667, abs=5e-5
    )
    assert rouge_n("the cat sat", "the cat sat on the mat", 2).f1 == pytest.approx(
        0.5714, abs=5e-5
    )
    assert rouge_l("the cat sat", "the cat sat on the mat").f1 == pytest.approx(
        0.6667, abs=5e-5
    )


def _fixed_synthetic_chunks() -> list[Chunk]:
    chunks = []
    index = 0
    for c, size in enumerate((18, 25, 14)):
        sentences = [
            Sentence(index + i, f"Synthetic sentence {index + i} about topic {(index + i) % 5}.")
            for i in range(size)
        ]
        index += size
        chunks.append(Chunk(c, sentences, token_count=7 * size))
    return chunks


def test_extractor_determinism_and_purity():
    chunks = _fixed_synthetic_chunks()
    source = {s.text for c in chunks for s in c.sentences}

    baseline = extract_step(chunks, 0.3, hash_embed, seed=42, global_correction=True)
    for _ in range(99):
        again = extract_step(chunks, 0.3, hash_embed, seed=42, global_correction=True)
        assert again.per_chunk_selected == baseline.per_chunk_selected
        assert again.concatenated_text == baseline.concatenated_text

    for chunk, selected in zip(chunks, baseline.per_chunk_selected):
        by_index = {s.index: s.text for s in chunk.sentences}
        for i in selected:
            assert by_index[i] in source

    # the flagged drift case: ratio 0.17 over 21 sentences in 3 chunks
    drift_chunks = []
    index = 0
    for c in range(3):
        sentences = [Sentence(index + i, f"Drift sentence {index + i}.") for i in range(7)]
        index += 7
        drift_chunks.append(Chunk(c, sentences, token_count=21))
    corrected = extract_step(drift_chunks, 0.17, hash_embed, seed=42, global_correction=True)
    assert sum(len(s) for s in corrected.per_chunk_selected) == 4


def test_kmeans_recovers_well_separated_clusters_50_of_50():
    points = [(0, 0), (0.1, 0), (5, 5), (5.1, 5), (10, 0), (10, 0.1)]
    expected = [{0, 1}, {2, 3}, {4, 5}]
    recovered = 0
    for seed in range(50):
        result = kmeans(points, 3, seed=seed)
        groups: dict[int, set[int]] = {}
        for point, cluster in enumerate(result.assignments):
            groups.setdefault(cluster, set()).add(point)
        if sorted(groups.values(), key=min) == expected:
            recovered += 1
    assert recovered == 50


def test_corpus_filter_removes_the_synthetic_outlier():
    pairs = [
        DocumentPair(f"d{i}", " ".join(["w"] * 100), "g", "train") for i in range(9)
    ]
    pairs.append(DocumentPair("d9", " ".join(["w"] * 1000), "g", "train"))
    stats = compute_stats(pairs)
    assert stats.outlier_threshold_words == pytest.approx(730.0)
    kept, removed = filter_outliers(pairs, stats)
    assert [p.id for p in removed] == ["d9"]
    assert len(kept) == 9


def test_corpus_filter_reproduces_eur_lex_sum_splits():
    location = os.environ.get("EUR_LEX_SUM_JSONL", "data/eur_lex_sum_en.jsonl")
    path = Path(location)
    if not path.is_file():
        pytest.skip(f"EUR-Lex-Sum English data not present at {path}")
    pairs = load_corpus(path)
    by_split = {split: [p for p in pairs if p.split == split] for split in
                ("train", "validation", "test")}
    assert (len(by_split["train"]), len(by_split["validation"]), len(by_split["test"])) == (
        1129, 187, 188,
    )
    stats = compute_stats(pairs)
    kept, removed = filter_outliers(pairs, stats)
    assert len(removed) == 62
    kept_by_split = {split: [p for p in kept if p.split == split] for split in by_split}
    assert (
        len(kept_by_split["train"]),
        len(kept_by_split["validation"]),
        len(kept_by_split["test"]),
    ) == (1091, 172, 179)


def test_end_to_end_mock_run_three_steps_under_five_seconds():
    backend = default_mock_backend()
    cfg = PipelineConfig(
        extractive_profile=backend.profile("mock-extractive"),
        abstractive_profile=backend.profile("mock-abstractive"),
        strategy=RatioStrategy("fixed", 0.4),
    )
    pair = make_pair("headline", 10_240)
    assert word_count(pair.reference_text) == 10_240
    started = time.monotonic()
    record = summarize(pair, cfg, backend)
    elapsed = time.monotonic() - started
    assert record.plan.n_steps == 3
    assert len(record.steps) == 3
    trajectory = [record.plan.doc_length] + [s.token_count for s in record.steps]
    assert all(later < earlier for earlier, later in zip(trajectory, trajectory[1:]))
    assert record.final_summary.strip()
    assert elapsed < 5.0, f"pipeline took {elapsed:.2f}s, budget is 5s"
