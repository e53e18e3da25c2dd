"""logsift: log template extraction via clustered, cache-filtered LLM batch prompting.

The pipeline slices a log stream into chunks, clusters each chunk on
masked TF-IDF vectors, filters every partition through a template cache,
and sends one diversity-sampled batch per residual partition to an LLM.
Returned templates are normalized, matched back against the partition,
and inserted into the cache so later duplicates never reach the model.
"""

from logsift.config import ConfigError, PipelineConfig, load_config, save_config
from logsift.ingest import Chunk, LogRecord, chunk, load_raw, load_structured
from logsift.pipeline import ParseRun, parse_dataset
from logsift.template_cache import LogTemplate, TemplateCache

__version__ = "0.1.0"

__all__ = [
    "Chunk",
    "ConfigError",
    "LogRecord",
    "LogTemplate",
    "ParseRun",
    "PipelineConfig",
    "TemplateCache",
    "chunk",
    "load_config",
    "load_raw",
    "load_structured",
    "parse_dataset",
    "save_config",
]
