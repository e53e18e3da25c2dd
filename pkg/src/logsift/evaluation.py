"""Grouping accuracy, message-level accuracy, edit-distance score, reports.

GA counts a record as correct when the set of records sharing its predicted
template equals the set sharing its ground-truth template. MLA counts exact
template-string equality after whitespace canonicalization. ED averages
1 - levenshtein(p, t) / max(len(p), len(t)) per record (two empty strings
score 1); a variant averaging over distinct (predicted, truth) template
pairs is also available, and reports state which mode produced the number.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Mapping


class CoverageError(ValueError):
    """Predicted and truth label sets disagree; lists the gap line ids."""

    def __init__(self, missing_truth: list[int], missing_predicted: list[int]) -> None:
        self.missing_truth = missing_truth
        self.missing_predicted = missing_predicted
        parts = []
        if missing_truth:
            parts.append(f"no ground truth for lines {_preview(missing_truth)}")
        if missing_predicted:
            parts.append(f"no prediction for lines {_preview(missing_predicted)}")
        super().__init__("; ".join(parts))


def _preview(ids: list[int], limit: int = 20) -> str:
    shown = ", ".join(str(i) for i in ids[:limit])
    return shown + (", ..." if len(ids) > limit else "")


def _canon(text: str) -> str:
    return " ".join(text.split())


def _check_alignment(predicted: Mapping[int, str], truth: Mapping[int, str]) -> None:
    if predicted.keys() == truth.keys():
        return
    raise CoverageError(
        missing_truth=sorted(predicted.keys() - truth.keys()),
        missing_predicted=sorted(truth.keys() - predicted.keys()),
    )


def group_accuracy(predicted: Mapping[int, str], truth: Mapping[int, str]) -> float:
    """Fraction of records whose predicted group equals their truth group."""
    _check_alignment(predicted, truth)
    if not truth:
        raise ValueError("cannot score an empty record set")
    truth_groups: dict[str, set[int]] = defaultdict(set)
    for line_id, template in truth.items():
        truth_groups[_canon(template)].add(line_id)
    predicted_groups: dict[str, set[int]] = defaultdict(set)
    for line_id, template in predicted.items():
        predicted_groups[_canon(template)].add(line_id)
    correct = 0
    for group in predicted_groups.values():
        probe = next(iter(group))
        if truth_groups[_canon(truth[probe])] == group:
            correct += len(group)
    return correct / len(truth)


def message_level_accuracy(predicted: Mapping[int, str], truth: Mapping[int, str]) -> float:
    """Fraction of records with the exact right template string."""
    _check_alignment(predicted, truth)
    if not truth:
        raise ValueError("cannot score an empty record set")
    hits = sum(1 for line_id in truth if _canon(predicted[line_id]) == _canon(truth[line_id]))
    return hits / len(truth)


def levenshtein(a: str, b: str) -> int:
    """Character-level edit distance, iterative two-row dynamic program."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            current[j] = min(
                previous[j] + 1,  # deletion
                current[j - 1] + 1,  # insertion
                previous[j - 1] + (ca != cb),  # substitution
            )
        previous = current
    return previous[-1]


def pair_edit_score(predicted: str, truth: str) -> float:
    """1 - normalized edit distance; two empty strings are a perfect match."""
    p, t = _canon(predicted), _canon(truth)
    longest = max(len(p), len(t))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(p, t) / longest


def edit_distance_score(predicted: Mapping[int, str], truth: Mapping[int, str],
                        mode: str = "record") -> float:
    """Mean pair score per record (default) or per distinct template pair."""
    _check_alignment(predicted, truth)
    if not truth:
        raise ValueError("cannot score an empty record set")
    if mode not in ("record", "pair"):
        raise ValueError(f"unknown edit-distance mode {mode!r}")
    pairs = Counter((_canon(predicted[i]), _canon(truth[i])) for i in truth)
    if mode == "pair":
        return sum(pair_edit_score(p, t) for p, t in pairs) / len(pairs)
    total = sum(pair_edit_score(p, t) * n for (p, t), n in pairs.items())
    return total / len(truth)


@dataclass
class MetricsReport:
    ga: float
    mla: float
    ed: float
    ed_mode: str
    n_records: int
    invocations: int
    total_tokens: int
    tokens_per_invocation: float
    no_invocations: bool
    confusion: list[tuple[str, str, int]] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "group_accuracy": self.ga,
            "message_level_accuracy": self.mla,
            "edit_distance_score": self.ed,
            "edit_distance_mode": self.ed_mode,
            "records": self.n_records,
            "invocations": self.invocations,
            "total_tokens": self.total_tokens,
            "tokens_per_invocation": self.tokens_per_invocation,
            "no_invocations": self.no_invocations,
            "confusion": [
                {"truth": t, "predicted": p, "count": n} for t, p, n in self.confusion
            ],
        }

    def to_text(self) -> str:
        lines = [
            f"records                {self.n_records}",
            f"edit-distance mode     {self.ed_mode}-mean",
            f"group accuracy         {self.ga:.4f}",
            f"message-level accuracy {self.mla:.4f}",
            f"edit distance score    {self.ed:.4f}",
            f"invocations            {self.invocations}",
            f"total tokens           {self.total_tokens}",
        ]
        if self.no_invocations:
            lines.append("tokens per invocation  0 (no invocations)")
        else:
            lines.append(f"tokens per invocation  {self.tokens_per_invocation:.2f}")
        return "\n".join(lines)


def report(predicted: Mapping[int, str], truth: Mapping[int, str],
           ledger_summary: Mapping | None = None, ed_mode: str = "record") -> MetricsReport:
    """Assemble the full metrics report for one run."""
    _check_alignment(predicted, truth)
    summary = dict(ledger_summary or {})
    mismatches = Counter(
        (_canon(truth[i]), _canon(predicted[i]))
        for i in truth
        if _canon(predicted[i]) != _canon(truth[i])
    )
    confusion = sorted(
        ((t, p, n) for (t, p), n in mismatches.items()),
        key=lambda item: (-item[2], item[0], item[1]),
    )
    invocations = int(summary.get("invocations", 0))
    return MetricsReport(
        ga=group_accuracy(predicted, truth),
        mla=message_level_accuracy(predicted, truth),
        ed=edit_distance_score(predicted, truth, mode=ed_mode),
        ed_mode=ed_mode,
        n_records=len(truth),
        invocations=invocations,
        total_tokens=int(summary.get("total_tokens", 0)),
        tokens_per_invocation=float(summary.get("tokens_per_invocation", 0.0)),
        no_invocations=invocations == 0,
        confusion=confusion,
    )


def per_record_rows(predicted: Mapping[int, str], truth: Mapping[int, str]) -> list[dict]:
    """Line-delimited record rows for the machine-readable report file."""
    _check_alignment(predicted, truth)
    truth_groups: dict[str, set[int]] = defaultdict(set)
    for line_id, template in truth.items():
        truth_groups[_canon(template)].add(line_id)
    predicted_groups: dict[str, set[int]] = defaultdict(set)
    for line_id, template in predicted.items():
        predicted_groups[_canon(template)].add(line_id)
    rows = []
    for line_id in sorted(truth):
        p, t = _canon(predicted[line_id]), _canon(truth[line_id])
        rows.append(
            {
                "line_id": line_id,
                "predicted": p,
                "truth": t,
                "group_correct": predicted_groups[p] == truth_groups[t],
                "template_correct": p == t,
                "edit_score": pair_edit_score(p, t),
            }
        )
    return rows


def dumps_rows(rows: list[dict]) -> str:
    return "".join(json.dumps(row) + "\n" for row in rows)
