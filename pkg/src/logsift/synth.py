"""Synthetic labeled log corpora for tests and experiments.

Generated templates start with a head word unique within the dataset, so no
template's matcher can swallow another template's logs; parameter slots are
never adjacent and never lead the line, keeping every truth template a
fixpoint of the normalization rules (asserted at generation time).

Two parameter styles:

* ``maskable``: integers, IPv4 addresses, hex ids. The masking stage
  collapses them, so logs of one template become identical masked token
  streams and clustering separates templates cleanly.
* ``alpha``: word-like values that survive masking, leaving clustering to
  cope with high-IDF parameter tokens. Useful for exercising the outlier
  path and for showing what batching buys when single-log prompts fail.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from logsift.ingest import LogRecord
from logsift.postprocess import normalize_template

HEAD_WORDS = [
    "Registered", "Deleting", "Mounted", "Connection", "Received", "Starting",
    "Stopped", "Allocated", "Released", "Verified", "Scheduling", "Expired",
    "Opened", "Closed", "Renewed", "Promoted", "Demoted", "Synced", "Flushed",
    "Compacted", "Migrated", "Evicted", "Throttled", "Resumed", "Suspended",
    "Attached", "Detached", "Published", "Revoked", "Granted", "Rejected",
    "Queued", "Dispatched", "Retired", "Imported", "Exported", "Archived",
    "Restored", "Probed", "Warmed", "Signed",
]

BODY_WORDS = [
    "block", "replica", "worker", "session", "segment", "lease", "shard",
    "volume", "bucket", "table", "region", "channel", "broker", "snapshot",
    "manifest", "cursor", "offset", "peer", "handle", "ticket", "batch",
    "quota", "mount", "route", "token",
]

TAIL_WORDS = [
    "successfully", "for maintenance", "on local disk", "after timeout",
    "in standby mode", "with checksum ok", "at low priority", "under load",
    "from coordinator", "by scheduler",
]

ALPHA_WORDS = [
    "kappa", "sigma", "omega", "delta", "lambda", "zephyr", "quartz", "topaz",
    "onyx", "garnet", "umber", "ochre", "viridian", "cobalt", "russet",
    "saffron", "indigo", "maroon", "teal", "puce",
]


@dataclass
class SynthDataset:
    contents: list[str]
    truth: list[str]  # per line, aligned with contents
    template_pool: list[str]

    @property
    def n_lines(self) -> int:
        return len(self.contents)

    def records(self) -> list[LogRecord]:
        return [
            LogRecord(line_id=i, content=c, raw=c) for i, c in enumerate(self.contents)
        ]

    def truth_by_line(self) -> dict[int, str]:
        return dict(enumerate(self.truth))

    def truth_by_content(self) -> dict[str, str]:
        return {c: t for c, t in zip(self.contents, self.truth)}


def _value_pool(rng: np.random.Generator, style: str, pool_size: int) -> list[str]:
    kind = style if style == "alpha" else rng.choice(["int", "ip", "hex"])
    values: list[str] = []
    while len(values) < pool_size:
        if kind == "alpha":
            word = ALPHA_WORDS[int(rng.integers(len(ALPHA_WORDS)))]
            value = word if rng.random() < 0.5 else f"{word}{int(rng.integers(2, 99))}"
        elif kind == "int":
            value = str(int(rng.integers(1, 100000)))
        elif kind == "ip":
            value = "10.%d.%d.%d" % tuple(rng.integers(0, 256, size=3))
        else:
            value = "0x%08x" % int(rng.integers(1, 2**32))
        if value not in values:
            values.append(value)
    return values


def _make_template(rng: np.random.Generator, head: str, n_slots: int) -> str:
    body = list(rng.choice(BODY_WORDS, size=2 + int(rng.integers(0, 3)), replace=False))
    tokens = [head] + body
    # place slots after literal positions so no two slots touch
    positions = sorted(rng.choice(len(tokens), size=min(n_slots, len(tokens)), replace=False))
    out: list[str] = []
    for i, token in enumerate(tokens):
        out.append(token)
        if i in positions:
            out.append("<*>")
    if rng.random() < 0.5:
        out.append(TAIL_WORDS[int(rng.integers(len(TAIL_WORDS)))])
    return " ".join(out)


def make_dataset(n_lines: int, n_templates: int, seed: int,
                 param_style: str = "maskable") -> SynthDataset:
    """Deterministic labeled corpus with zipf-ish template frequencies.

    Every template gets at least six lines (enough to form a density cluster
    under the default min_samples) and every parameter slot cycles through a
    small value pool, so parameterized templates always emit at least two
    distinct instantiations.
    """
    if param_style not in ("maskable", "alpha"):
        raise ValueError(f"unknown param style {param_style!r}")
    if not 1 <= n_templates <= len(HEAD_WORDS):
        raise ValueError(f"n_templates must be in 1..{len(HEAD_WORDS)}")
    if n_lines < 6 * n_templates:
        raise ValueError("need at least 6 lines per template")
    rng = np.random.default_rng(seed)

    heads = list(rng.choice(HEAD_WORDS, size=n_templates, replace=False))
    templates: list[str] = []
    pools: list[list[list[str]]] = []
    for i, head in enumerate(heads):
        # keep at least half the templates parameterized
        n_slots = 0 if (i % 2 == 1 and rng.random() < 0.3) else 1 + int(rng.integers(0, 3))
        text = _make_template(rng, head, n_slots)
        assert normalize_template(text) == text, f"template not normal: {text!r}"
        templates.append(text)
        pools.append(
            [_value_pool(rng, param_style, 5 + int(rng.integers(0, 5)))
             for _ in range(text.count("<*>"))]
        )

    weights = 1.0 / np.arange(1, n_templates + 1)
    extra = rng.multinomial(n_lines - 6 * n_templates, weights / weights.sum())
    counts = 6 + extra

    contents: list[str] = []
    truth: list[str] = []
    for t_index, template in enumerate(templates):
        for i in range(int(counts[t_index])):
            line = template
            for slot, pool in enumerate(pools[t_index]):
                line = line.replace("<*>", pool[(i + slot) % len(pool)], 1)
            contents.append(line)
            truth.append(template)
    order = rng.permutation(len(contents))
    return SynthDataset(
        contents=[contents[i] for i in order],
        truth=[truth[i] for i in order],
        template_pool=templates,
    )


def write_structured_csv(path: str | Path, dataset: SynthDataset) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["LineId", "Content", "EventTemplate"])
        for i, (content, template) in enumerate(zip(dataset.contents, dataset.truth)):
            writer.writerow([i + 1, content, template])
