"""Command-line interface.

Subcommands:

* ``parse``     run the pipeline over a dataset into an output directory
* ``evaluate``  score a run directory against ground-truth templates
* ``cache``     dump or validate template cache files

Exit codes: 0 success, 1 unexpected error, 2 configuration error,
3 backend failure, 4 truth-coverage failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from logsift import evaluation
from logsift.config import (
    LLM_BACKENDS,
    SAMPLING_METHODS,
    ConfigError,
    load_config,
)
from logsift.ingest import SchemaError, load_raw, load_structured
from logsift.llm_client import BackendError, make_backend
from logsift.pipeline import (
    CACHE_FILE,
    MANIFEST_FILE,
    OUTCOME_FILE,
    loads_outcomes,
    parse_dataset,
    write_run,
)
from logsift.postprocess import load_rules
from logsift.preprocess import mask_rule_lines
from logsift.template_cache import TemplateCache

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_COVERAGE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logsift",
        description="log template extraction via cache-filtered LLM batch prompting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a dataset into an output directory")
    p.add_argument("--input", required=True, help="dataset file (CSV or raw log)")
    p.add_argument("--config", default=None, help="config file (INI-style)")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--format", choices=("structured", "raw"), default="structured")
    p.add_argument("--header-regex", default=None,
                   help="raw format: regex with a (?P<content>...) group")
    p.add_argument("--chunk-size", type=int, default=None)
    p.add_argument("--eps", type=float, default=None, help="DBSCAN eps")
    p.add_argument("--min-samples", type=int, default=None, help="DBSCAN min_samples")
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--sampling", choices=SAMPLING_METHODS, default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--max-retries", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="rng seed")
    p.add_argument("--backend", choices=LLM_BACKENDS, default=None)
    p.add_argument("--no-partitioning", action="store_true",
                   help="ablation: fixed windows instead of clustering")
    p.add_argument("--no-caching", action="store_true",
                   help="ablation: disable the template cache")
    p.add_argument("--cache-in", default=None, help="prime the cache from a dump file")
    p.add_argument("--rules", default=None, help="template correction rule file")
    p.add_argument("--extra-delims", default="", help="additional tokenizer delimiters")
    p.add_argument("--workers", type=int, default=1, help="chunk workers (default 1)")
    p.add_argument("--dump-masks", action="store_true",
                   help="print the masking rule table and exit")

    e = sub.add_parser("evaluate", help="score a run directory against ground truth")
    e.add_argument("--outcomes", required=True, help="run directory from `parse`")
    e.add_argument("--truth", required=True,
                   help="CSV with Content and EventTemplate columns")
    e.add_argument("--ed-mode", choices=("record", "pair"), default="record")
    e.add_argument("--emit-confusion", action="store_true",
                   help="also write per-template mismatch counts")

    c = sub.add_parser("cache", help="inspect template cache files")
    csub = c.add_subparsers(dest="cache_command", required=True)
    cd = csub.add_parser("dump", help="print a cache in its line format")
    cd.add_argument("path", help="cache file or run directory")
    cl = csub.add_parser("load", help="validate a cache file and summarize it")
    cl.add_argument("path", help="cache file")
    return parser


def _config_overrides(args: argparse.Namespace) -> dict:
    overrides = {
        "chunk_size": args.chunk_size,
        "dbscan_eps": args.eps,
        "dbscan_min_samples": args.min_samples,
        "batch_size": args.batch_size,
        "sampling_method": args.sampling,
        "temperature": args.temperature,
        "max_retries": args.max_retries,
        "rng_seed": args.seed,
        "llm_backend": args.backend,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.no_partitioning:
        overrides["partitioning_enabled"] = False
    if args.no_caching:
        overrides["caching_enabled"] = False
    return overrides


def _cmd_parse(args: argparse.Namespace) -> int:
    if args.dump_masks:
        for line in mask_rule_lines():
            print(line)
        return EXIT_OK
    config = load_config(args.config, _config_overrides(args))
    if args.format == "raw":
        if not args.header_regex:
            raise ConfigError("header_regex", "raw format requires --header-regex")
        loaded = load_raw(args.input, args.header_regex)
    else:
        loaded = load_structured(args.input)
    truth = None
    if config.llm_backend == "offline_oracle":
        if not loaded.ground_truth:
            raise SchemaError(
                "EventTemplate: offline_oracle backend needs ground-truth templates"
            )
        by_line = loaded.ground_truth
        truth = {r.content: by_line[r.line_id] for r in loaded.records
                 if r.line_id in by_line}
    backend = make_backend(config, truth)
    cache = TemplateCache.load(args.cache_in) if args.cache_in else None
    rules = load_rules(args.rules) if args.rules else None
    run = parse_dataset(
        config, loaded.records, backend=backend, truth=truth, cache=cache,
        rules=rules, extra_delims=args.extra_delims, workers=args.workers,
        dataset_path=str(args.input),
    )
    write_run(run, args.output)
    summary = run.ledger.summary()
    print(
        f"parsed {len(run.outcomes)} records in {len(run.manifest['chunks'])} chunks: "
        f"{summary['invocations']} invocations, {summary['total_tokens']} tokens, "
        f"{len(run.cache)} cached templates -> {args.output}"
    )
    if loaded.skipped_blank or loaded.unmatched_lines or loaded.replaced_bytes:
        print(
            f"input notes: {loaded.skipped_blank} blank lines skipped, "
            f"{loaded.unmatched_lines} header mismatches, "
            f"{loaded.replaced_bytes} invalid bytes replaced",
            file=sys.stderr,
        )
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    run_dir = Path(args.outcomes)
    outcome_path = run_dir / OUTCOME_FILE
    if not outcome_path.exists():
        raise FileNotFoundError(f"no {OUTCOME_FILE} in {run_dir}")
    rows = loads_outcomes(outcome_path.read_text(encoding="utf-8"))
    predicted = {row.line_id: row.template for row in rows}

    loaded = load_structured(args.truth)
    if not loaded.ground_truth:
        raise SchemaError("EventTemplate: required column missing from truth CSV")
    truth = {r.line_id: loaded.ground_truth[r.line_id] for r in loaded.records
             if r.line_id in loaded.ground_truth}

    ledger_summary = None
    manifest_path = run_dir / MANIFEST_FILE
    if manifest_path.exists():
        ledger_summary = json.loads(manifest_path.read_text(encoding="utf-8")).get("ledger")

    metrics = evaluation.report(predicted, truth, ledger_summary, ed_mode=args.ed_mode)
    print(metrics.to_text())
    (run_dir / "report.txt").write_text(metrics.to_text() + "\n", encoding="utf-8")
    (run_dir / "report.json").write_text(
        json.dumps(metrics.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )
    rows_out = evaluation.per_record_rows(predicted, truth)
    (run_dir / "records.jsonl").write_text(
        evaluation.dumps_rows(rows_out), encoding="utf-8"
    )
    if args.emit_confusion:
        lines = [f"{n}\t{t}\t{p}" for t, p, n in metrics.confusion]
        (run_dir / "confusion.tsv").write_text(
            "".join(line + "\n" for line in lines), encoding="utf-8"
        )
        print(f"confusion pairs: {len(metrics.confusion)} (written to confusion.tsv)")
    return EXIT_OK


def _cmd_cache(args: argparse.Namespace) -> int:
    path = Path(args.path)
    if path.is_dir():
        path = path / CACHE_FILE
    cache = TemplateCache.load(path)
    if args.cache_command == "dump":
        sys.stdout.write(cache.dumps())
        return EXIT_OK
    entries = cache.entries()
    total = sum(e.frequency for e in entries)
    print(f"{len(entries)} templates, total frequency {total}, file ok: {path}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "parse":
            return _cmd_parse(args)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        return _cmd_cache(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except evaluation.CoverageError as exc:
        print(f"coverage error: {exc}", file=sys.stderr)
        return EXIT_COVERAGE
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
