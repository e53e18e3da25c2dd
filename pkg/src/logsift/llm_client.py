"""Prompt construction, pluggable completion backends, and token accounting.

The prompt is a single instruction followed by the batch, one log per line,
with no demonstrations. Replies are free text; the template is read from the
last backtick-delimited span, where any ``{...}`` placeholder and any literal
``<*>`` both map to the canonical wildcard. When no usable span exists the
caller falls back to :func:`fallback_template`, a position-wise token vote
that degrades gracefully to masking on a single log.

Backends: ``http`` speaks the chat-completions wire format and retries
transport errors with exponential backoff; ``offline_oracle`` answers with
the ground-truth template of the batch's first log (test harness);
``fallback_only`` returns an unusable reply so the voting templater always
takes over. Token counts come from backend usage metadata when present,
otherwise from a local estimator.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from collections import Counter
from dataclasses import dataclass, field

import requests

from logsift.preprocess import is_variable_token
from logsift.template_cache import WILDCARD

INSTRUCTION_VERSION = "1"
INSTRUCTION = (
    "You will receive a batch of log messages, one per line. All of them were "
    "printed by the same logging statement, so they share a single template. "
    "Abstract every dynamic variable (values that change between messages, such "
    "as identifiers, numbers, addresses, or paths) with {placeholder}, and keep "
    "the constant text unchanged. Note that some logs carry no variables at all; "
    "in that case return the text as it is rather than inventing placeholders. "
    "Reply with exactly one line: the shared template wrapped in backticks, "
    "like `template`."
)

_PLACEHOLDER = re.compile(r"\{[^{}]*\}")
_BACKTICK_SPAN = re.compile(r"`([^`]*)`")
_SEGMENTS = re.compile(r"\w+|[^\w\s]")

# one whitespace-or-punctuation segment averages ~1.3 model tokens
_TOKENS_PER_SEGMENT = 1.3


class BackendError(RuntimeError):
    """Backend unusable after retries; carries the last transport failure."""

    def __init__(self, message: str, last_error: Exception | None = None) -> None:
        super().__init__(message)
        self.last_error = last_error


@dataclass(frozen=True)
class PromptSpec:
    instruction: str
    batch: list[str]
    rendered: str


@dataclass(frozen=True)
class LlmReply:
    raw_text: str
    prompt_tokens: int
    completion_tokens: int
    backend_id: str
    usage_reported: bool = False

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


def build_prompt(batch_logs: list[str]) -> PromptSpec:
    """Instruction plus the batch, newline-separated, each log exactly once."""
    if not batch_logs:
        raise ValueError("cannot build a prompt from an empty batch")
    rendered = INSTRUCTION + "\n\n" + "\n".join(batch_logs)
    return PromptSpec(instruction=INSTRUCTION, batch=list(batch_logs), rendered=rendered)


def estimate_tokens(text: str) -> int:
    return int(round(len(_SEGMENTS.findall(text)) * _TOKENS_PER_SEGMENT))


def extract_template(raw_text: str) -> str | None:
    """Template from the last backtick span, or None when unusable."""
    spans = _BACKTICK_SPAN.findall(raw_text)
    if not spans:
        return None
    candidate = _PLACEHOLDER.sub(WILDCARD, spans[-1]).strip()
    return candidate or None


def fallback_template(batch_logs: list[str]) -> str:
    """Rule-based template vote over the batch.

    Logs are grouped by whitespace-token count and the most frequent length
    wins (ties: first length seen). Within that group each column keeps its
    token only when every log agrees; any disagreement becomes a wildcard, so
    the voted template always matches at least the whole voting group. A
    single log degrades to masking variable-looking tokens.
    """
    if not batch_logs:
        raise ValueError("cannot vote on an empty batch")
    split = [log.split() for log in batch_logs]
    counts = Counter(len(tokens) for tokens in split)
    best_length = max(counts, key=lambda length: (counts[length], -_first_index(split, length)))
    group = [tokens for tokens in split if len(tokens) == best_length]
    if len(group) == 1:
        voted = [WILDCARD if is_variable_token(tok) else tok for tok in group[0]]
    else:
        voted = [
            column[0] if all(tok == column[0] for tok in column) else WILDCARD
            for column in zip(*group)
        ]
    return " ".join(voted)


def _first_index(split: list[list[str]], length: int) -> int:
    return next(i for i, tokens in enumerate(split) if len(tokens) == length)


@dataclass
class InvocationRecord:
    prompt_tokens: int
    completion_tokens: int
    backend_id: str
    usage_reported: bool

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


class TokenLedger:
    """Thread-safe tally of every backend invocation."""

    def __init__(self) -> None:
        self.records: list[InvocationRecord] = []
        self._lock = threading.Lock()

    def record(self, reply: LlmReply) -> None:
        with self._lock:
            self.records.append(
                InvocationRecord(
                    prompt_tokens=reply.prompt_tokens,
                    completion_tokens=reply.completion_tokens,
                    backend_id=reply.backend_id,
                    usage_reported=reply.usage_reported,
                )
            )

    @property
    def invocations(self) -> int:
        return len(self.records)

    @property
    def total_tokens(self) -> int:
        return sum(r.total_tokens for r in self.records)

    @property
    def tokens_per_invocation(self) -> float:
        if not self.records:
            return 0.0
        return self.total_tokens / len(self.records)

    def summary(self) -> dict:
        return {
            "invocations": self.invocations,
            "prompt_tokens": sum(r.prompt_tokens for r in self.records),
            "completion_tokens": sum(r.completion_tokens for r in self.records),
            "total_tokens": self.total_tokens,
            "tokens_per_invocation": self.tokens_per_invocation,
            "no_invocations": not self.records,
            "any_estimated": any(not r.usage_reported for r in self.records),
        }


class HttpBackend:
    """Chat-completions endpoint client with exponential-backoff retries."""

    def __init__(self, base_url: str, api_key: str, model: str,
                 temperature: float = 0.0, max_retries: int = 3,
                 timeout: float = 60.0, post=None, sleep=None) -> None:
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.temperature = temperature
        self.max_retries = max_retries
        self.timeout = timeout
        self._post = post or requests.post
        self._sleep = sleep or time.sleep
        self.backend_id = f"http:{model}"
        self.last_attempts = 0

    def build_request(self, prompt: PromptSpec) -> dict:
        """Deterministic request; identical prompts yield identical bytes."""
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": prompt.instruction},
                {"role": "user", "content": "\n".join(prompt.batch)},
            ],
            "temperature": self.temperature,
        }
        return {
            "url": f"{self.base_url}/chat/completions",
            "headers": {
                "Authorization": f"Bearer {self.api_key}",
                "Content-Type": "application/json",
            },
            "body": json.dumps(body).encode("utf-8"),
        }

    def complete(self, prompt: PromptSpec) -> LlmReply:
        request = self.build_request(prompt)
        last_error: Exception | None = None
        delay = 1.0  # base backoff, doubled per retry
        for attempt in range(self.max_retries + 1):
            self.last_attempts = attempt + 1
            if attempt:
                self._sleep(delay)
                delay *= 2.0
            try:
                response = self._post(
                    request["url"], data=request["body"],
                    headers=request["headers"], timeout=self.timeout,
                )
            except (requests.RequestException, OSError) as exc:
                last_error = exc
                continue
            status = getattr(response, "status_code", 200)
            if status == 429 or status >= 500:
                last_error = BackendError(f"HTTP {status} from {request['url']}")
                continue
            if status != 200:
                raise BackendError(f"HTTP {status} from {request['url']}")
            payload = response.json()
            try:
                text = payload["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"malformed completion payload: {exc}") from None
            usage = payload.get("usage") or {}
            if "prompt_tokens" in usage and "completion_tokens" in usage:
                return LlmReply(raw_text=text, prompt_tokens=int(usage["prompt_tokens"]),
                                completion_tokens=int(usage["completion_tokens"]),
                                backend_id=self.backend_id, usage_reported=True)
            return LlmReply(raw_text=text, prompt_tokens=estimate_tokens(prompt.rendered),
                            completion_tokens=estimate_tokens(text),
                            backend_id=self.backend_id, usage_reported=False)
        raise BackendError(
            f"backend unavailable after {self.max_retries + 1} attempts", last_error
        )


class OracleBackend:
    """Answers with the ground-truth template of the batch's first log."""

    backend_id = "offline_oracle"

    def __init__(self, truth: dict[str, str]) -> None:
        self.truth = truth

    def _template_for(self, prompt: PromptSpec) -> str:
        first = prompt.batch[0]
        if first not in self.truth:
            raise BackendError(f"oracle has no ground truth for {first!r}")
        return self.truth[first]

    def complete(self, prompt: PromptSpec) -> LlmReply:
        text = f"`{self._template_for(prompt)}`"
        return LlmReply(raw_text=text, prompt_tokens=estimate_tokens(prompt.rendered),
                        completion_tokens=estimate_tokens(text),
                        backend_id=self.backend_id)


class NoisyOracleBackend(OracleBackend):
    """Oracle that is only reliable when the batch is informative.

    With fewer than ``min_distinct`` distinct logs it echoes the first log
    verbatim as if every value were constant, which is the characteristic
    single-log failure mode batching is meant to fix.
    """

    backend_id = "noisy_oracle"

    def __init__(self, truth: dict[str, str], min_distinct: int = 2) -> None:
        super().__init__(truth)
        self.min_distinct = min_distinct

    def complete(self, prompt: PromptSpec) -> LlmReply:
        if len(set(prompt.batch)) >= self.min_distinct:
            return super().complete(prompt)
        text = f"`{prompt.batch[0]}`"
        return LlmReply(raw_text=text, prompt_tokens=estimate_tokens(prompt.rendered),
                        completion_tokens=estimate_tokens(text),
                        backend_id=self.backend_id)


class FallbackOnlyBackend:
    """Always-unusable replies: the rule-based voting templater takes over."""

    backend_id = "fallback_only"

    def complete(self, prompt: PromptSpec) -> LlmReply:
        return LlmReply(raw_text="", prompt_tokens=0, completion_tokens=0,
                        backend_id=self.backend_id)


def make_backend(config, truth: dict[str, str] | None = None, env=None):
    """Instantiate the backend named by ``config.llm_backend``."""
    env = os.environ if env is None else env
    if config.llm_backend == "http":
        base_url = env.get("LLM_BASE_URL")
        api_key = env.get("LLM_API_KEY")
        if not base_url or not api_key:
            raise BackendError("http backend needs LLM_BASE_URL and LLM_API_KEY set")
        model = env.get("LLM_MODEL", "gpt-3.5-turbo")
        return HttpBackend(base_url=base_url, api_key=api_key, model=model,
                           temperature=config.temperature, max_retries=config.max_retries)
    if config.llm_backend == "offline_oracle":
        if truth is None:
            raise BackendError("offline_oracle backend needs ground-truth templates")
        return OracleBackend(truth)
    if config.llm_backend == "fallback_only":
        return FallbackOnlyBackend()
    raise BackendError(f"unknown backend {config.llm_backend!r}")


def query(prompt: PromptSpec, backend, ledger: TokenLedger | None = None) -> LlmReply:
    """One backend invocation, recorded in the ledger when given."""
    reply = backend.complete(prompt)
    if ledger is not None:
        ledger.record(reply)
    return reply
