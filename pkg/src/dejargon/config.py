"""Application configuration with JSON-file and environment overrides."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import PreconditionError
from .llm_gateway import ModelConfig

API_KEY_ENV_VARS = ("DEJARGON_API_KEY", "OPENAI_API_KEY")
API_BASE_ENV_VAR = "DEJARGON_API_BASE"

DEFAULT_PEER_REVIEW_KEYWORDS = (
    "accept",
    "to appear",
    "published in",
    "camera-ready",
    "proceedings of",
)


@dataclass
class AppConfig:
    """Tunable knobs for the whole pipeline.

    Defaults: chat/embedding model names and decoding limits follow the
    reference setup; chunking and retrieval defaults are the package's own.
    """

    api_base: str = "https://api.openai.com/v1"
    api_key: str | None = None
    chat_model: str = "gpt-4-turbo"
    embed_model: str = "text-embedding-3-small"
    max_tokens: int = 512
    temperature: float = 1.0
    deterministic: bool = False  # forces temperature 0 when set
    llm_mode: str = "replay"  # replay | record | live

    request_delay_s: float = 3.0  # minimum delay between upstream feed requests
    date_field: str = "updated"  # updated | published; which feed timestamp to window on
    peer_review_keywords: tuple[str, ...] = DEFAULT_PEER_REVIEW_KEYWORDS

    chunk_size: int = 2048
    chunk_overlap: int = 256
    retrieval_threshold: float = 0.3
    retrieval_k: int = 5
    rag_include_abstract: bool = False

    serving_method: str = "abstract_only"  # default method served to readers
    default_reader: str = "rid0"
    page_size_limit: int = 50
    cors_origins: tuple[str, ...] = ("*",)

    template_version: str = "v1"
    no_jargon_sentinel: str = "NO_JARGON"
    match_policy: str = "exact"  # exact | subsumption
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.date_field not in ("updated", "published"):
            raise PreconditionError(f"date_field must be updated|published, got {self.date_field!r}")
        if self.llm_mode not in ("replay", "record", "live"):
            raise PreconditionError(f"llm_mode must be replay|record|live, got {self.llm_mode!r}")
        if not 0 <= self.chunk_overlap < self.chunk_size:
            raise PreconditionError("chunk_overlap must satisfy 0 <= overlap < chunk_size")
        if self.page_size_limit < 1:
            raise PreconditionError("page_size_limit must be >= 1")

    @classmethod
    def load(cls, path: str | Path | None = None) -> "AppConfig":
        """Load config from a JSON file, then apply environment overrides.

        Unknown keys in the file are an error: silent typos in config are
        worse than a hard failure.
        """
        values: dict = {}
        if path is not None and Path(path).exists():
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
            known = {f.name for f in dataclasses.fields(cls)}
            unknown = sorted(set(raw) - known)
            if unknown:
                raise PreconditionError(f"unknown config keys: {', '.join(unknown)}")
            for key in ("peer_review_keywords", "cors_origins"):
                if key in raw:
                    raw[key] = tuple(raw[key])
            values = raw
        cfg = cls(**values)
        if os.environ.get(API_BASE_ENV_VAR):
            cfg.api_base = os.environ[API_BASE_ENV_VAR]
        if cfg.api_key is None:
            for var in API_KEY_ENV_VARS:
                if os.environ.get(var):
                    cfg.api_key = os.environ[var]
                    break
        return cfg

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            chat_model=self.chat_model,
            embed_model=self.embed_model,
            max_tokens=self.max_tokens,
            temperature=0.0 if self.deterministic else self.temperature,
        )
