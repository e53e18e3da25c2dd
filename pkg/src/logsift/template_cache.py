"""Template cache: regex matching, length consistency, frequency ordering.

A template is a log skeleton whose variable slots are the wildcard ``<*>``.
Matching compiles the template once: literal segments are escaped, each
wildcard becomes a lazy nonempty group ``(.+?)``, whitespace runs in literals
match any whitespace run, and the whole pattern is anchored at both ends. A
cache hit additionally requires the candidate log to have the same
whitespace-token count as the entry's reference log, which rejects
same-prefix lookalikes that a bare regex would swallow.

Lookup probes entries in descending frequency order (ties: older entry
first); hits bump the frequency, and the order is re-established lazily on
the next probe.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

WILDCARD = "<*>"


def regex_of(template_text: str) -> re.Pattern:
    """Compile a template into its anchored matcher (used via fullmatch)."""
    pieces: list[str] = []
    for i, literal in enumerate(template_text.split(WILDCARD)):
        if i:
            pieces.append(r"(.+?)")
        # literal whitespace runs match flexibly
        parts = re.split(r"\s+", literal)
        pieces.append(r"\s+".join(re.escape(part) for part in parts))
    return re.compile("".join(pieces))


@dataclass(frozen=True)
class LogTemplate:
    """Template text plus its compiled matcher and wildcard count."""

    text: str
    matcher: re.Pattern = field(compare=False, repr=False)
    wildcard_count: int = field(compare=False)

    @classmethod
    def from_text(cls, text: str) -> "LogTemplate":
        return cls(text=text, matcher=regex_of(text), wildcard_count=text.count(WILDCARD))

    def extract(self, content: str) -> list[str] | None:
        """Parameters captured from a matching log, else None."""
        found = self.matcher.fullmatch(content)
        if found is None:
            return None
        return list(found.groups())


@dataclass
class CacheEntry:
    template: LogTemplate
    reference_log: str
    frequency: int
    insertion_id: int


def match(entry: CacheEntry, content: str) -> list[str] | None:
    """Regex match plus token-count consistency against the reference log."""
    if len(content.split()) != len(entry.reference_log.split()):
        return None
    return entry.template.extract(content)


def _sanitize(text: str) -> str:
    # keep the dump line-delimited and tab-separated; whitespace runs are
    # equivalent under the flexible matcher anyway
    return " ".join(text.split())


class TemplateCache:
    """Mutable template store shared across chunks; thread-safe."""

    def __init__(self) -> None:
        self._entries: list[CacheEntry] = []
        self._by_text: dict[str, CacheEntry] = {}
        self._dirty = False
        self._next_id = 0
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._entries)

    def _resort(self) -> None:
        if self._dirty:
            self._entries.sort(key=lambda e: (-e.frequency, e.insertion_id))
            self._dirty = False

    def lookup(self, content: str) -> tuple[CacheEntry, list[str]] | None:
        """First matching entry in frequency order; a hit bumps its count."""
        with self._lock:
            self._resort()
            for entry in self._entries:
                params = match(entry, content)
                if params is not None:
                    entry.frequency += 1
                    self._dirty = True
                    return entry, params
            return None

    def insert(self, template: LogTemplate, reference_log: str,
               initial_frequency: int = 1) -> CacheEntry:
        """Add a template observed to match ``initial_frequency`` logs.

        The reference log must itself match the template; a duplicate
        template text merges into the existing entry, accumulating frequency.
        """
        if initial_frequency < 1:
            raise ValueError("initial_frequency must be >= 1")
        if template.extract(reference_log) is None:
            raise ValueError(
                f"reference log {reference_log!r} does not match template {template.text!r}"
            )
        with self._lock:
            existing = self._by_text.get(template.text)
            if existing is not None:
                existing.frequency += initial_frequency
                self._dirty = True
                return existing
            entry = CacheEntry(template=template, reference_log=reference_log,
                               frequency=initial_frequency, insertion_id=self._next_id)
            self._next_id += 1
            self._entries.append(entry)
            self._by_text[template.text] = entry
            self._dirty = True
            return entry

    def entries(self) -> list[CacheEntry]:
        """Snapshot in lookup (frequency) order."""
        with self._lock:
            self._resort()
            return list(self._entries)

    def dumps(self) -> str:
        lines = [
            f"{entry.frequency}\t{_sanitize(entry.template.text)}\t{_sanitize(entry.reference_log)}"
            for entry in self.entries()
        ]
        return "".join(line + "\n" for line in lines)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "TemplateCache":
        cache = cls()
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"cache line {lineno}: expected 3 tab-separated fields")
            raw_freq, template_text, reference = parts
            try:
                frequency = int(raw_freq)
            except ValueError:
                raise ValueError(f"cache line {lineno}: bad frequency {raw_freq!r}") from None
            if frequency < 1:
                raise ValueError(f"cache line {lineno}: frequency must be >= 1")
            cache.insert(LogTemplate.from_text(template_text), reference, frequency)
        return cache

    @classmethod
    def load(cls, path: str | Path) -> "TemplateCache":
        return cls.loads(Path(path).read_text(encoding="utf-8"))
