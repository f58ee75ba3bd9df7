"""Client for chat-completion and embedding providers with record/replay.

Live mode talks to any endpoint speaking the common chat-completions and
embeddings wire formats. Record mode additionally persists every response
into a fixtures directory keyed by a content hash of the request; replay
mode answers exclusively from those fixtures and raises on a miss, so the
test suite runs with zero live network calls.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Callable

import requests

from .errors import GatewayError, PreconditionError, ReplayMissError, RetryableTransportError

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .profiles import PromptBundle

logger = logging.getLogger(__name__)

CHAT_PATH = "/chat/completions"
EMBED_PATH = "/embeddings"


@dataclass(frozen=True)
class ModelConfig:
    """Decoding and model-selection parameters for one request."""

    chat_model: str = "gpt-4-turbo"
    embed_model: str = "text-embedding-3-small"
    max_tokens: int = 512
    temperature: float = 1.0

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise PreconditionError(f"max_tokens must be >= 1, got {self.max_tokens}")
        if self.temperature < 0:
            raise PreconditionError(f"temperature must be >= 0, got {self.temperature}")


@dataclass(frozen=True)
class EmbeddingVector:
    """A fixed-length vector of finite floats."""

    values: tuple[float, ...]
    dim: int

    def __post_init__(self) -> None:
        if len(self.values) != self.dim:
            raise PreconditionError(f"vector length {len(self.values)} != dim {self.dim}")
        if self.dim < 1:
            raise PreconditionError("embedding dim must be >= 1")
        if not all(math.isfinite(v) for v in self.values):
            raise PreconditionError("embedding values must be finite")

    @classmethod
    def of(cls, values) -> "EmbeddingVector":
        vals = tuple(float(v) for v in values)
        return cls(values=vals, dim=len(vals))


def canonical_json(obj) -> str:
    """Byte-stable serialization used for request hashing."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def request_hash(request: dict) -> str:
    return hashlib.sha256(canonical_json(request).encode("ascii")).hexdigest()


def chat_request(bundle: "PromptBundle", config: ModelConfig) -> dict:
    return {
        "kind": "chat",
        "model": config.chat_model,
        "system": bundle.system_text,
        "query": bundle.query_text,
        "max_tokens": config.max_tokens,
        "temperature": config.temperature,
    }


def embed_request(texts: list[str], config: ModelConfig) -> dict:
    return {"kind": "embed", "model": config.embed_model, "texts": list(texts)}


class LiveTransport:
    """HTTP transport with exponential backoff.

    Retries connection failures, 429s, and 5xx responses up to
    ``max_attempts`` times, honoring a server-provided ``Retry-After`` hint
    when present. Other 4xx responses fail immediately.
    """

    def __init__(
        self,
        api_base: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        max_attempts: int = 5,
        backoff_base_s: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.api_base = api_base.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_base_s = backoff_base_s
        self.sleep = sleep
        self.session = requests.Session()

    def __call__(self, path: str, payload: dict) -> dict:
        url = self.api_base + path
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            try:
                resp = self.session.post(url, json=payload, headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("transport error (attempt %d/%d): %s", attempt + 1, self.max_attempts, exc)
            else:
                if resp.status_code == 200:
                    return resp.json()
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error = RetryableTransportError(f"HTTP {resp.status_code} from {url}")
                    logger.warning(
                        "HTTP %d (attempt %d/%d)", resp.status_code, attempt + 1, self.max_attempts
                    )
                    hinted = _retry_after_seconds(resp.headers.get("Retry-After"))
                    if hinted is not None and attempt + 1 < self.max_attempts:
                        self.sleep(hinted)
                        continue
                else:
                    raise GatewayError(f"HTTP {resp.status_code} from {url}: {resp.text[:500]}")
            if attempt + 1 < self.max_attempts:
                self.sleep(self.backoff_base_s * (2**attempt))
        raise RetryableTransportError(f"transport failed after {self.max_attempts} attempts: {last_error}")


def _retry_after_seconds(value: str | None) -> float | None:
    if not value:
        return None
    try:
        return max(0.0, float(value))
    except ValueError:
        return None


class LlmGateway:
    """Uniform entry point for completions and embeddings.

    mode:
      live    - every request goes to the transport.
      record  - requests go to the transport and responses are persisted.
      replay  - requests are answered from fixtures only; a miss raises
                ReplayMissError (never a silent live fallback).
    """

    def __init__(
        self,
        mode: str = "replay",
        fixtures_dir: str | Path | None = None,
        transport: Callable[[str, dict], dict] | None = None,
        max_in_flight: int = 4,
    ):
        if mode not in ("live", "record", "replay"):
            raise PreconditionError(f"unknown gateway mode {mode!r}")
        if mode in ("record", "replay") and fixtures_dir is None:
            raise PreconditionError(f"mode {mode!r} requires a fixtures directory")
        if mode in ("record", "live") and transport is None:
            raise PreconditionError(f"mode {mode!r} requires a transport")
        self.mode = mode
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir is not None else None
        self.transport = transport
        self._flight_cap = threading.Semaphore(max_in_flight)
        self._write_lock = threading.Lock()
        self.live_calls = 0
        self.replay_hits = 0

    # -- public operations -------------------------------------------------

    def complete(self, bundle: "PromptBundle", config: ModelConfig | None = None) -> str:
        cfg = config if config is not None else bundle.model_config
        if not bundle.system_text or not bundle.query_text:
            raise PreconditionError("prompt bundle texts must be non-empty")
        request = chat_request(bundle, cfg)
        response = self._resolve(request, lambda: self._chat_live(bundle, cfg))
        return response["text"]

    def embed(self, texts: list[str], config: ModelConfig) -> list[EmbeddingVector]:
        if not texts:
            raise PreconditionError("embed requires at least one text")
        if any(not t for t in texts):
            raise PreconditionError("embed texts must all be non-empty")
        request = embed_request(texts, config)
        response = self._resolve(request, lambda: self._embed_live(texts, config))
        vectors = [EmbeddingVector.of(v) for v in response["embeddings"]]
        if len(vectors) != len(texts):
            raise GatewayError(f"expected {len(texts)} embeddings, got {len(vectors)}")
        dims = {v.dim for v in vectors}
        if len(dims) > 1:
            raise GatewayError(f"embeddings returned mixed dims {sorted(dims)}")
        return vectors

    # -- live wire formats ---------------------------------------------------

    def _chat_live(self, bundle: "PromptBundle", cfg: ModelConfig) -> dict:
        payload = {
            "model": cfg.chat_model,
            "messages": [
                {"role": "system", "content": bundle.system_text},
                {"role": "user", "content": bundle.query_text},
            ],
            "max_tokens": cfg.max_tokens,
            "temperature": cfg.temperature,
        }
        raw = self._call_transport(CHAT_PATH, payload)
        try:
            return {"text": raw["choices"][0]["message"]["content"]}
        except (KeyError, IndexError, TypeError) as exc:
            raise GatewayError(f"malformed chat response: {exc}") from exc

    def _embed_live(self, texts: list[str], cfg: ModelConfig) -> dict:
        payload = {"model": cfg.embed_model, "input": list(texts)}
        raw = self._call_transport(EMBED_PATH, payload)
        try:
            rows = sorted(raw["data"], key=lambda d: d["index"])
            return {"embeddings": [list(map(float, r["embedding"])) for r in rows]}
        except (KeyError, TypeError) as exc:
            raise GatewayError(f"malformed embeddings response: {exc}") from exc

    def _call_transport(self, path: str, payload: dict) -> dict:
        assert self.transport is not None
        with self._flight_cap:
            self.live_calls += 1
            return self.transport(path, payload)

    # -- record / replay ----------------------------------------------------

    def _resolve(self, request: dict, live: Callable[[], dict]) -> dict:
        key = request_hash(request)
        if self.mode == "replay":
            cached = self._read_fixture(key)
            if cached is None:
                raise ReplayMissError(key, summary=f"kind={request.get('kind')}")
            self.replay_hits += 1
            return cached
        response = live()
        if self.mode == "record":
            self._write_fixture(key, request, response)
        return response

    def _fixture_path(self, key: str) -> Path:
        assert self.fixtures_dir is not None
        return self.fixtures_dir / f"{key}.json"

    def _read_fixture(self, key: str) -> dict | None:
        path = self._fixture_path(key)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))["response"]

    def _write_fixture(self, key: str, request: dict, response: dict) -> None:
        path = self._fixture_path(key)
        with self._write_lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(
                json.dumps({"request": request, "response": response}, sort_keys=True, indent=2),
                encoding="utf-8",
            )
            os.replace(tmp, path)


def write_fixture(fixtures_dir: str | Path, request: dict, response: dict) -> str:
    """Record one (request, response) fixture; returns the request hash.

    Exposed so tooling can pre-seed replay caches.
    """
    gw = LlmGateway(mode="record", fixtures_dir=fixtures_dir, transport=lambda p, d: {})
    key = request_hash(request)
    gw._write_fixture(key, request, response)
    return key
