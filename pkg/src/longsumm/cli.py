"""Command-line interface.

Subcommands: ingest, stats, plan, summarize, evaluate, compare.
Exit codes: 0 success, 1 partial/data failure, 2 usage or config failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from longsumm import corpus as corpus_mod
from longsumm import extractor as extractor_mod
from longsumm import pipeline as pipeline_mod
from longsumm import planner, scoring
from longsumm.backends import BackendError, HttpBackend, default_mock_backend
from longsumm.config import AppConfig, load_config
from longsumm.planner import RatioStrategy

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2


def _load_pairs(args) -> list[corpus_mod.DocumentPair]:
    return corpus_mod.load_corpus(args.corpus, format=args.format)


def cmd_ingest(args) -> int:
    pairs = _load_pairs(args)
    stats = corpus_mod.compute_stats(pairs, population_sd=not args.sample_sd)
    kept, removed = corpus_mod.filter_outliers(pairs, stats)
    to_write = kept if args.filter_outliers else pairs
    if args.out:
        corpus_mod.write_corpus_jsonl(to_write, args.out)
    report = corpus_mod.stats_report(stats, removed if args.filter_outliers else [])
    json.dump(report, sys.stdout, indent=2)
    print()
    return EXIT_OK


def cmd_stats(args) -> int:
    pairs = _load_pairs(args)
    stats = corpus_mod.compute_stats(pairs, population_sd=not args.sample_sd)
    _, removed = corpus_mod.filter_outliers(pairs, stats)
    json.dump(corpus_mod.stats_report(stats, removed), sys.stdout, indent=2)
    print()
    return EXIT_OK


def cmd_plan(args) -> int:
    strategy = RatioStrategy(kind=args.strategy, fixed_ratio=args.fixed_ratio)
    plan = planner.plan(args.doc_tokens, args.context, strategy)
    json.dump(plan.to_dict(), sys.stdout, indent=2)
    print()
    return EXIT_OK


def _make_backend(args, config: AppConfig):
    if args.mock:
        return default_mock_backend(seed=args.seed)
    if not config.base_url:
        raise ValueError(
            "no backend endpoint configured; pass --config with a base_url, "
            "set LONGSUMM_BASE_URL, or use --mock"
        )
    return HttpBackend(
        config.base_url, timeout=config.timeout, auth_token=config.auth_token
    )


def _resolve_profile(backend, config: AppConfig, model_id: str, mock: bool):
    if mock:
        return backend.profile(model_id)
    return config.profile(model_id)


def cmd_summarize(args) -> int:
    config = load_config(args.config)
    if args.seed is None:
        args.seed = config.seed
    backend = _make_backend(args, config)
    extractive_id = args.extractive or ("mock-extractive" if args.mock else None)
    abstractive_id = args.abstractive or ("mock-abstractive" if args.mock else None)
    if not extractive_id or not abstractive_id:
        raise ValueError("--extractive and --abstractive are required without --mock")
    cfg = pipeline_mod.PipelineConfig(
        extractive_profile=_resolve_profile(backend, config, extractive_id, args.mock),
        abstractive_profile=_resolve_profile(backend, config, abstractive_id, args.mock),
        strategy=RatioStrategy(kind=args.strategy, fixed_ratio=args.fixed_ratio),
        seed=args.seed,
        global_budget_correction=args.global_correction,
        truncation_policy=args.truncation_policy,
        distance_metric=args.distance_metric,
        max_new_tokens=args.max_new_tokens,
    )
    pairs = _load_pairs(args)
    items = pipeline_mod.run_batch(pairs, cfg, backend, parallelism=args.jobs)
    for item in items:
        if item.ok:
            record = item.record
            trajectory = [record.plan.doc_length] + [s.token_count for s in record.steps]
            print(
                f"{item.document_id}: steps={record.plan.n_steps} "
                f"tokens={'->'.join(str(t) for t in trajectory)} "
                f"final_tokens_abs={record.pre_abstractive_tokens_abs}"
            )
        else:
            print(f"{item.document_id}: FAILED ({item.error})")
    if args.out:
        pipeline_mod.write_records_jsonl(items, args.out)
    failures = [item for item in items if not item.ok]
    if failures:
        print(f"{len(failures)}/{len(items)} documents failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _score_records(records_path: Path, pairs) -> scoring.ScoreReport:
    records = pipeline_mod.read_records_jsonl(records_path)
    known = {p.id for p in pairs}
    orphans = sorted({r.document_id for r in records} - known)
    if orphans:
        raise KeyError(f"records reference unknown document id(s): {', '.join(orphans)}")
    return scoring.score_records(records, pairs)


def cmd_evaluate(args) -> int:
    pairs = _load_pairs(args)
    try:
        report = _score_records(Path(args.records), pairs)
    except KeyError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PARTIAL
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    print(scoring.render_table([report]))
    return EXIT_OK


def cmd_compare(args) -> int:
    pairs = _load_pairs(args)
    reports = []
    failed = False
    for records_path in args.records:
        try:
            reports.append(_score_records(Path(records_path), pairs))
        except KeyError as exc:
            print(f"{records_path}: {exc}", file=sys.stderr)
            failed = True
    if reports:
        print(scoring.render_table(reports))
    return EXIT_PARTIAL if failed else EXIT_OK


def _add_corpus_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("corpus", help="corpus file (JSONL) or directory")
    parser.add_argument(
        "--format", choices=("jsonl", "directory"), default="jsonl",
        help="corpus layout (default: jsonl)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="longsumm",
        description="Multi-step extractive-abstractive summarization for long documents",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    ingest = commands.add_parser("ingest", help="load a corpus, report stats, write JSONL")
    _add_corpus_arguments(ingest)
    ingest.add_argument("--out", help="write canonical JSONL here")
    ingest.add_argument(
        "--filter-outliers", action="store_true",
        help="drop documents more than 2 standard deviations above the mean word count",
    )
    ingest.add_argument(
        "--sample-sd", action="store_true",
        help="use the sample standard deviation instead of the population one",
    )
    ingest.set_defaults(handler=cmd_ingest)

    stats = commands.add_parser("stats", help="print corpus statistics")
    _add_corpus_arguments(stats)
    stats.add_argument("--sample-sd", action="store_true")
    stats.set_defaults(handler=cmd_stats)

    plan = commands.add_parser("plan", help="print a compression plan as JSON")
    plan.add_argument("--doc-tokens", type=int, required=True)
    plan.add_argument("--context", type=int, required=True)
    plan.add_argument("--strategy", choices=planner.STRATEGY_KINDS, default="fixed")
    plan.add_argument("--fixed-ratio", type=float, default=0.4)
    plan.set_defaults(handler=cmd_plan)

    summarize = commands.add_parser("summarize", help="run the pipeline over a corpus")
    _add_corpus_arguments(summarize)
    summarize.add_argument("--extractive", help="extractive model profile id")
    summarize.add_argument("--abstractive", help="abstractive model profile id")
    summarize.add_argument("--strategy", choices=planner.STRATEGY_KINDS, default="fixed")
    summarize.add_argument("--fixed-ratio", type=float, default=0.4)
    summarize.add_argument("--seed", type=int, default=None)
    summarize.add_argument("--out", help="write run records (JSONL) here")
    summarize.add_argument("--mock", action="store_true", help="use in-tree mock backends")
    summarize.add_argument("--config", help="TOML config file")
    summarize.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    summarize.add_argument("--global-correction", action="store_true")
    summarize.add_argument(
        "--truncation-policy", choices=pipeline_mod.TRUNCATION_POLICIES,
        default="drop-trailing-sentences",
    )
    summarize.add_argument(
        "--distance-metric", choices=extractor_mod.DISTANCE_METRICS, default="euclidean",
    )
    summarize.add_argument("--max-new-tokens", type=int, default=1500)
    summarize.set_defaults(handler=cmd_summarize)

    evaluate = commands.add_parser("evaluate", help="score run records against a corpus")
    evaluate.add_argument("records", help="run records JSONL")
    _add_corpus_arguments(evaluate)
    evaluate.add_argument("--out", help="write the JSON report here")
    evaluate.set_defaults(handler=cmd_evaluate)

    compare = commands.add_parser("compare", help="side-by-side scores for record sets")
    compare.add_argument("records", nargs="+", help="two or more run record files")
    compare.add_argument("--corpus", required=True, dest="corpus")
    compare.add_argument(
        "--format", choices=("jsonl", "directory"), default="jsonl"
    )
    compare.set_defaults(handler=cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except (FileNotFoundError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (corpus_mod.CorpusFormatError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except (ValueError, KeyError, BackendError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
