"""End-to-end orchestration: chunk, partition, cache-filter, batch, prune.

Each chunk is vectorized against its own vocabulary and clustered (or cut
into fixed windows when partitioning is disabled). Partitions are processed
queue-first: members matching a cached template are resolved as cache hits;
the residue is deduplicated, sampled into one batch, and sent to the backend.
The extracted, normalized template is matched back against the residue
(Algorithm: matched members finalize, unmatched members re-enter the queue
head). A template that matches nothing costs one unit of the partition's
retry budget; once the budget is gone the rule-based voting templater takes
over, which by construction always matches at least the batch's dominant
length group, so every record terminates with an outcome.

Provenance: the records actually exemplified in the batch carry ``llm`` (or
``fallback``); other members matched through the just-cached template count
as cache hits. Cache entries start at the matched-member count, so every
record contributes exactly once to a template's frequency.
"""

from __future__ import annotations

import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from logsift.config import PipelineConfig
from logsift.ingest import Chunk, LogRecord, chunk as cut_chunks
from logsift.llm_client import (
    INSTRUCTION_VERSION,
    TokenLedger,
    build_prompt,
    extract_template,
    fallback_template,
    make_backend,
    query,
)
from logsift.partition import Partition, partition_chunk, passthrough_partition
from logsift.postprocess import (
    PROVENANCE_CACHE,
    PROVENANCE_FALLBACK,
    PROVENANCE_LLM,
    ParseOutcome,
    Rule,
    finalize,
    match_and_prune,
    normalize_template,
)
from logsift.preprocess import tokenize_record
from logsift.sampling import dedupe, dpp_sample, random_sample, similarity_sample
from logsift.template_cache import LogTemplate, TemplateCache
from logsift.vectorize import build_vocabulary, tfidf_vector

# queries a partition may burn on templates that match nothing before the
# voting templater takes over
RETRY_BUDGET = 3

_SAMPLERS = {
    "diversity": dpp_sample,
    "similarity": similarity_sample,
    "random": random_sample,
}


@dataclass
class ChunkStats:
    chunk_index: int
    records: int
    partitions: int = 0
    cache_hits: int = 0
    invocations: int = 0
    fallbacks: int = 0

    def as_dict(self) -> dict:
        return {
            "chunk_index": self.chunk_index,
            "records": self.records,
            "partitions": self.partitions,
            "cache_hits": self.cache_hits,
            "invocations": self.invocations,
            "fallbacks": self.fallbacks,
        }


@dataclass
class ParseRun:
    outcomes: list[ParseOutcome]
    manifest: dict
    cache: TemplateCache
    ledger: TokenLedger


def _sample_batch(config: PipelineConfig, contents: list[str], vectors, seed_parts):
    sampler = _SAMPLERS[config.sampling_method]
    if sampler is random_sample:
        return sampler(contents, config.batch_size, seed=list(seed_parts))
    return sampler(contents, vectors, config.batch_size, seed=config.rng_seed)


def _process_chunk(chunk: Chunk, config: PipelineConfig, cache: TemplateCache,
                   ledger: TokenLedger, backend, rules: list[Rule] | None,
                   extra_delims: str) -> tuple[list[ParseOutcome], ChunkStats]:
    stats = ChunkStats(chunk_index=chunk.chunk_index, records=chunk.size)
    outcomes: list[ParseOutcome] = []
    if not chunk.records:
        return outcomes, stats

    tokenized = [tokenize_record(record, extra_delims) for record in chunk.records]
    vocab = build_vocabulary(tokenized)
    vector_of = {
        log.record.line_id: tfidf_vector(log, vocab) for log in tokenized
    }

    if config.partitioning_enabled:
        partitions = partition_chunk(
            chunk.records, [vector_of[r.line_id] for r in chunk.records],
            config.dbscan_eps, config.dbscan_min_samples,
        )
    else:
        partitions = passthrough_partition(chunk, config.batch_size)
    stats.partitions = len(partitions)

    queue: deque[tuple[Partition, int]] = deque(
        (part, RETRY_BUDGET) for part in partitions
    )
    sample_round = 0
    while queue:
        part, budget = queue.popleft()

        # cache filter: resolve known templates before spending any tokens
        residual_members: list[LogRecord] = []
        if config.caching_enabled:
            for record in part.members:
                hit = cache.lookup(record.content)
                if hit is None:
                    residual_members.append(record)
                    continue
                entry, params = hit
                outcomes.append(
                    ParseOutcome(record=record, template=entry.template,
                                 parameters=params, provenance=PROVENANCE_CACHE)
                )
                stats.cache_hits += 1
        else:
            residual_members = list(part.members)
        if not residual_members:
            part.status = "parsed"
            continue
        residual = Partition(members=residual_members,
                             is_outlier_group=part.is_outlier_group)

        first_record_of = {}
        for record in residual.members:
            first_record_of.setdefault(record.content, record.line_id)
        contents = dedupe(residual)
        vectors = [vector_of[first_record_of[c]] for c in contents]
        batch = _sample_batch(config, contents, vectors,
                              (config.rng_seed, chunk.chunk_index, sample_round))
        batch.source_partition = residual
        sample_round += 1

        tokens_spent = 0
        if budget > 0:
            prompt = build_prompt(batch.logs)
            reply = query(prompt, backend, ledger)
            stats.invocations += 1
            tokens_spent = reply.total_tokens
            template_text = extract_template(reply.raw_text)
            provenance = PROVENANCE_LLM
            if template_text is None:
                template_text = fallback_template(batch.logs)
                provenance = PROVENANCE_FALLBACK
                stats.fallbacks += 1
        else:
            # retry budget exhausted: vote, which always makes progress
            template_text = fallback_template(batch.logs)
            provenance = PROVENANCE_FALLBACK
            stats.fallbacks += 1

        template = LogTemplate.from_text(normalize_template(template_text, rules))
        matched, unmatched = match_and_prune(residual, template)

        if not matched.members:
            if budget <= 0:
                # the voting templater matches its batch by construction
                raise RuntimeError(
                    f"voted template {template.text!r} matched nothing in a "
                    f"partition of {residual.size} logs"
                )
            # useless template; retry the whole partition with less budget
            queue.appendleft((residual, budget - 1))
            continue

        exemplars = {
            first_record_of[content]
            for content in batch.logs
            if template.matcher.fullmatch(content) is not None
        }
        direct = [r for r in matched.members if r.line_id in exemplars]
        indirect = [r for r in matched.members if r.line_id not in exemplars]
        outcomes.extend(finalize(direct, template, provenance, tokens_spent))
        if indirect:
            # reached through the (about to be) cached template, not the prompt
            via = PROVENANCE_CACHE if config.caching_enabled else provenance
            outcomes.extend(finalize(indirect, template, via))
            if config.caching_enabled:
                stats.cache_hits += len(indirect)
        if config.caching_enabled:
            cache.insert(template, matched.members[0].content,
                         initial_frequency=len(matched.members))
        if unmatched is not None:
            queue.appendleft((unmatched, RETRY_BUDGET))
    return outcomes, stats


def parse_dataset(config: PipelineConfig, records: list[LogRecord], *,
                  backend=None, truth: dict[str, str] | None = None,
                  cache: TemplateCache | None = None,
                  rules: list[Rule] | None = None, extra_delims: str = "",
                  workers: int = 1, dataset_path: str | None = None) -> ParseRun:
    """Parse a dataset and return outcomes, manifest, cache and ledger.

    ``backend`` defaults to whatever ``config.llm_backend`` names;
    ``truth`` (content -> template) feeds the offline oracle. A preloaded
    ``cache`` enables replay across runs. ``workers`` > 1 processes chunks in
    threads sharing one cache; the default of 1 keeps runs byte-identical.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    started = time.perf_counter()
    if backend is None:
        backend = make_backend(config, truth)
    cache = cache if cache is not None else TemplateCache()
    ledger = TokenLedger()

    chunks = cut_chunks(records, config.chunk_size)
    results: list[tuple[list[ParseOutcome], ChunkStats]] = []
    if workers == 1 or len(chunks) <= 1:
        for one in chunks:
            results.append(
                _process_chunk(one, config, cache, ledger, backend, rules, extra_delims)
            )
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_process_chunk, one, config, cache, ledger, backend,
                            rules, extra_delims)
                for one in chunks
            ]
            results = [f.result() for f in futures]

    outcomes = [outcome for chunk_outcomes, _ in results for outcome in chunk_outcomes]
    outcomes.sort(key=lambda o: o.record.line_id)
    stats = [s for _, s in results]
    manifest = {
        "config": config.as_dict(),
        "dataset": dataset_path,
        "records": len(records),
        "outcomes": len(outcomes),
        "chunks": [s.as_dict() for s in stats],
        "invocations": sum(s.invocations for s in stats),
        "cache_entries": len(cache),
        "instruction_version": INSTRUCTION_VERSION,
        "ledger": ledger.summary(),
        "duration_seconds": time.perf_counter() - started,
    }
    return ParseRun(outcomes=outcomes, manifest=manifest, cache=cache, ledger=ledger)


def predicted_by_line(outcomes: list[ParseOutcome]) -> dict[int, str]:
    return {o.record.line_id: o.template.text for o in outcomes}


OUTCOME_FILE = "outcomes.tsv"
MANIFEST_FILE = "manifest.json"
CACHE_FILE = "cache.tsv"


def dumps_outcomes(outcomes: list[ParseOutcome]) -> str:
    """line_id, template, |-joined parameters, provenance; tab-separated."""
    lines = []
    for o in outcomes:
        params = "|".join(" ".join(p.split()) for p in o.parameters)
        lines.append(f"{o.record.line_id}\t{o.template.text}\t{params}\t{o.provenance}")
    return "".join(line + "\n" for line in lines)


@dataclass(frozen=True)
class OutcomeRow:
    line_id: int
    template: str
    parameters: list[str] = field(compare=False)
    provenance: str = "llm"


def loads_outcomes(text: str) -> list[OutcomeRow]:
    rows: list[OutcomeRow] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"outcome line {lineno}: expected 4 tab-separated fields")
        line_id, template, params, provenance = parts
        rows.append(
            OutcomeRow(line_id=int(line_id), template=template,
                       parameters=params.split("|") if params else [],
                       provenance=provenance)
        )
    return rows


def write_run(run: ParseRun, out_dir: str | Path) -> None:
    import json

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / OUTCOME_FILE).write_text(dumps_outcomes(run.outcomes), encoding="utf-8")
    (out / MANIFEST_FILE).write_text(
        json.dumps(run.manifest, indent=2) + "\n", encoding="utf-8"
    )
    run.cache.dump(out / CACHE_FILE)
