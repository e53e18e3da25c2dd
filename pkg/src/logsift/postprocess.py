"""Template correction rules and the match/prune split for parsed partitions.

LLM-returned templates routinely leave concrete values in the constant part.
``normalize_template`` repairs the frequent cases with an ordered, data-driven
rule table: numeric and hex tokens become wildcards, wildcard runs joined by
nothing or by ``/ . :`` collapse, quotes hugging a lone wildcard are dropped,
and whitespace is canonicalized. The table is applied until a fixpoint, so
the result is idempotent by construction; it can be replaced at runtime from
a text file for maintenance without code changes.

``match_and_prune`` splits a partition against a template by anchored regex
match; the matched side is final, the unmatched side goes back to the queue.
``finalize`` turns matched members into outcomes, extracting parameters with
the template's own matcher.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from logsift.ingest import LogRecord
from logsift.partition import Partition
from logsift.template_cache import LogTemplate

PROVENANCE_CACHE = "cache_hit"
PROVENANCE_LLM = "llm"
PROVENANCE_FALLBACK = "fallback"
PROVENANCES = (PROVENANCE_CACHE, PROVENANCE_LLM, PROVENANCE_FALLBACK)

_MAX_PASSES = 16


@dataclass(frozen=True)
class Rule:
    """One rewrite: ``token`` rules must consume a whole whitespace token,
    ``text`` rules substitute anywhere in the template string."""

    kind: str  # token | text
    pattern: re.Pattern
    replacement: str


DEFAULT_RULE_TEXT = """\
# template correction rules, applied in order until a fixpoint
# kind<TAB>pattern<TAB>replacement
token\t-?\\d+(?:\\.\\d+)?\t<*>
token\t0[xX][0-9a-fA-F]+\t<*>
token\t[0-9a-fA-F]{8,}\t<*>
text\t<\\*>\\s*[/.:]?\\s*<\\*>\t<*>
text\t(["'])<\\*>\\1\t<*>
"""


def parse_rules(text: str) -> list[Rule]:
    rules: list[Rule] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"rule line {lineno}: expected kind<TAB>pattern<TAB>replacement")
        kind, pattern, replacement = parts
        if kind not in ("token", "text"):
            raise ValueError(f"rule line {lineno}: unknown kind {kind!r}")
        try:
            compiled = re.compile(pattern)
        except re.error as exc:
            raise ValueError(f"rule line {lineno}: bad pattern: {exc}") from None
        rules.append(Rule(kind=kind, pattern=compiled, replacement=replacement))
    return rules


def load_rules(path: str | Path) -> list[Rule]:
    return parse_rules(Path(path).read_text(encoding="utf-8"))


DEFAULT_RULES = parse_rules(DEFAULT_RULE_TEXT)


def _one_pass(text: str, rules: list[Rule]) -> str:
    for rule in rules:
        if rule.kind == "token":
            tokens = text.split()
            text = " ".join(
                rule.replacement if rule.pattern.fullmatch(tok) else tok for tok in tokens
            )
        else:
            text = rule.pattern.sub(rule.replacement, text)
    return " ".join(text.split())  # whitespace canonicalization, always last


def normalize_template(text: str, rules: list[Rule] | None = None) -> str:
    """Apply the correction table to a fixpoint (idempotent)."""
    rules = DEFAULT_RULES if rules is None else rules
    current = text
    for _ in range(_MAX_PASSES):
        after = _one_pass(current, rules)
        if after == current:
            return after
        current = after
    return current


@dataclass(frozen=True)
class ParseOutcome:
    """Final label for one record.

    ``tokens_charged`` attributes the producing invocation's total tokens to
    records parsed directly by it (informational; the ledger holds the
    authoritative totals). Cache hits and query-free fallbacks charge zero.
    """

    record: LogRecord
    template: LogTemplate
    parameters: list[str]
    provenance: str
    tokens_charged: int = 0


def match_and_prune(partition: Partition, template: LogTemplate) -> tuple[Partition, Partition | None]:
    """Split a partition by template match, preserving member order.

    Conservation: |matched| + |unmatched| == |partition|. The unmatched side
    is None when everything matched.
    """
    matched: list[LogRecord] = []
    unmatched: list[LogRecord] = []
    for record in partition.members:
        if template.matcher.fullmatch(record.content) is not None:
            matched.append(record)
        else:
            unmatched.append(record)
    matched_part = Partition(members=matched, is_outlier_group=partition.is_outlier_group,
                             status="parsed")
    if not unmatched:
        return matched_part, None
    rest = Partition(members=unmatched, is_outlier_group=partition.is_outlier_group,
                     status="pending")
    return matched_part, rest


def finalize(records: list[LogRecord], template: LogTemplate, provenance: str,
             tokens_charged: int = 0) -> list[ParseOutcome]:
    """Outcomes for records known to match ``template``.

    A member that fails the matcher is a contract violation and raises.
    """
    if provenance not in PROVENANCES:
        raise ValueError(f"unknown provenance {provenance!r}")
    outcomes: list[ParseOutcome] = []
    for record in records:
        params = template.extract(record.content)
        if params is None:
            raise ValueError(
                f"finalize contract violated: line {record.line_id} does not match "
                f"{template.text!r}"
            )
        outcomes.append(
            ParseOutcome(record=record, template=template, parameters=params,
                         provenance=provenance, tokens_charged=tokens_charged)
        )
    return outcomes
