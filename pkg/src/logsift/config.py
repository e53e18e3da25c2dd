"""Validated pipeline configuration with file round-tripping.

The on-disk format is INI-style: flat keys grouped into fixed sections so
diffs stay readable. Every field has a default, so an empty file is a valid
config. Endpoint secrets (API key, base URL, model name) deliberately have
no place here; the HTTP backend reads those from the environment.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, fields
from pathlib import Path

SAMPLING_METHODS = ("diversity", "similarity", "random")
LLM_BACKENDS = ("http", "offline_oracle", "fallback_only")

# Section layout of the config file. Keys are globally unique; the section
# a key appears under is cosmetic on load but canonical on save.
_SECTIONS: dict[str, tuple[str, ...]] = {
    "pipeline": ("chunk_size", "partitioning_enabled", "caching_enabled", "rng_seed"),
    "clustering": ("dbscan_eps", "dbscan_min_samples"),
    "batching": ("batch_size", "sampling_method"),
    "llm": ("temperature", "llm_backend", "max_retries"),
}

_TRUE_WORDS = frozenset({"true", "1", "yes", "on"})
_FALSE_WORDS = frozenset({"false", "0", "no", "off"})


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending field."""

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class PipelineConfig:
    """All tunables for one parsing run.

    Defaults match the evaluation setup the pipeline was tuned on: DBSCAN
    with eps 0.5 and min_samples 5, batches of 10 logs, temperature 0.
    ``batch_size=1`` is the legal no-batching ablation; ``partitioning_enabled``
    and ``caching_enabled`` switch those stages off wholesale.
    """

    chunk_size: int = 2000
    dbscan_eps: float = 0.5
    dbscan_min_samples: int = 5
    batch_size: int = 10
    sampling_method: str = "diversity"
    temperature: float = 0.0
    partitioning_enabled: bool = True
    caching_enabled: bool = True
    llm_backend: str = "http"
    max_retries: int = 3
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.chunk_size < 1:
            raise ConfigError("chunk_size", "must be an integer >= 1")
        if not self.dbscan_eps > 0:
            raise ConfigError("dbscan_eps", "must be a real number > 0")
        if self.dbscan_min_samples < 1:
            raise ConfigError("dbscan_min_samples", "must be an integer >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size", "must be an integer >= 1")
        if self.sampling_method not in SAMPLING_METHODS:
            raise ConfigError(
                "sampling_method", f"must be one of {', '.join(SAMPLING_METHODS)}"
            )
        if self.temperature < 0:
            raise ConfigError("temperature", "must be a real number >= 0")
        if self.llm_backend not in LLM_BACKENDS:
            raise ConfigError("llm_backend", f"must be one of {', '.join(LLM_BACKENDS)}")
        if self.max_retries < 0:
            raise ConfigError("max_retries", "must be an integer >= 0")

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# Field types inferred from the defaults; bool is checked before int because
# bool subclasses int.
_FIELD_TYPES: dict[str, type] = {
    f.name: type(f.default) for f in fields(PipelineConfig)
}
_KNOWN_KEYS = frozenset(_FIELD_TYPES)


def _coerce_string(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    if kind is bool:
        lowered = raw.lower()
        if lowered in _TRUE_WORDS:
            return True
        if lowered in _FALSE_WORDS:
            return False
        raise ConfigError(key, f"expected a boolean, got {raw!r}")
    if kind is int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(key, f"expected an integer, got {raw!r}") from None
    if kind is float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(key, f"expected a number, got {raw!r}") from None
    return raw


def _coerce(key: str, value):
    """Coerce a file or override value to the field's type."""
    if key not in _KNOWN_KEYS:
        raise ConfigError(key, "unknown key")
    if isinstance(value, str):
        return _coerce_string(key, value)
    kind = _FIELD_TYPES[key]
    if kind is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(key, f"expected a boolean, got {value!r}")
    if kind is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise ConfigError(key, f"expected an integer, got {value!r}")
    if kind is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        raise ConfigError(key, f"expected a number, got {value!r}")
    raise ConfigError(key, f"expected a string, got {value!r}")


def loads_config(text: str, overrides: dict | None = None) -> PipelineConfig:
    """Parse config text; ``overrides`` take precedence over file values."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", f"malformed config file: {exc}") from None
    values: dict = {}
    seen: set[str] = set()
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key in seen:
                raise ConfigError(key, "key appears more than once")
            seen.add(key)
            values[key] = _coerce(key, raw)
    for key, value in (overrides or {}).items():
        values[key] = _coerce(key, value)
    return PipelineConfig(**values)


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Load a config file (optional) and apply overrides on top.

    With no path and no overrides this returns pure defaults. Unknown keys,
    type mismatches and invariant violations raise :class:`ConfigError`
    naming the offending key.
    """
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc}") from None
    return loads_config(text, overrides)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dumps_config(config: PipelineConfig) -> str:
    out = io.StringIO()
    for section, keys in _SECTIONS.items():
        out.write(f"[{section}]\n")
        for key in keys:
            out.write(f"{key} = {_format_value(getattr(config, key))}\n")
        out.write("\n")
    return out.getvalue()


def save_config(config: PipelineConfig, path: str | Path) -> None:
    Path(path).write_text(dumps_config(config), encoding="utf-8")
