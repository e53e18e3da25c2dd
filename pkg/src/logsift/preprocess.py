"""Tokenization and variable masking ahead of vectorization.

Tokenization splits on whitespace first, then refines each token on a small
delimiter set (kept as tokens of their own) so that ``pid=16563`` becomes
``pid`` ``=`` ``16563``. URL-like tokens (scheme prefix) and path-like tokens
(containing ``/``) are kept intact because splitting them destroys the very
shape that makes them recognizable.

Masking rewrites tokens that look like runtime values to a reserved symbol
``<M>`` so logs printed by one statement converge to near-identical token
streams. Masking feeds vectorization and clustering only; prompts and
template matching always see the original text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from logsift.ingest import LogRecord

MASK = "<M>"
REFINED_DELIMITERS = "=,:;()[]"

_URL_TOKEN = re.compile(r"[A-Za-z][A-Za-z0-9+.\-]*://\S*")

# Ordered masking rules; a token is masked when any pattern consumes it
# entirely. Mixed identifiers such as rdd_5_1 match none of these on purpose.
MASK_RULES: list[tuple[str, re.Pattern]] = [
    ("decimal", re.compile(r"-?\d+(?:\.\d+)?")),
    ("hex-prefixed", re.compile(r"0[xX][0-9a-fA-F]+")),
    ("hex-long", re.compile(r"[0-9a-fA-F]{8,}")),
    ("ipv4", re.compile(r"\d{1,3}(?:\.\d{1,3}){3}(?::\d+)?")),
    ("url", _URL_TOKEN),
]


@dataclass
class TokenizedLog:
    record: LogRecord
    tokens: list[str]
    masked_tokens: list[str]


def _split_pattern(extra_delims: str) -> re.Pattern:
    return re.compile("([" + re.escape(REFINED_DELIMITERS + extra_delims) + "])")


_DEFAULT_SPLIT = _split_pattern("")


def tokenize(content: str, extra_delims: str = "") -> list[str]:
    """Split a log message into tokens, retaining delimiters as tokens."""
    splitter = _DEFAULT_SPLIT if not extra_delims else _split_pattern(extra_delims)
    tokens: list[str] = []
    for word in content.split():
        if "/" in word or _URL_TOKEN.fullmatch(word):
            tokens.append(word)
            continue
        tokens.extend(piece for piece in splitter.split(word) if piece)
    return tokens


def is_variable_token(token: str) -> bool:
    return any(pattern.fullmatch(token) for _, pattern in MASK_RULES)


def mask(tokens: list[str]) -> list[str]:
    """Replace variable-looking tokens with ``<M>``; length-preserving and
    idempotent (``<M>`` itself matches no rule)."""
    return [MASK if is_variable_token(token) else token for token in tokens]


def tokenize_record(record: LogRecord, extra_delims: str = "") -> TokenizedLog:
    tokens = tokenize(record.content, extra_delims)
    return TokenizedLog(record=record, tokens=tokens, masked_tokens=mask(tokens))


def mask_rule_lines() -> list[str]:
    """Human-auditable dump of the masking rule table (name, pattern)."""
    return [f"{name}\t{pattern.pattern}" for name, pattern in MASK_RULES]
