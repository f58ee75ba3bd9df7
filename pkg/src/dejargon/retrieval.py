"""Fulltext chunking, embedding, and cosine-threshold retrieval.

The index is an exact brute-force scan over one article's chunks: corpora
here are single papers, and exactness keeps the behavior easy to verify.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import PreconditionError
from .llm_gateway import EmbeddingVector, LlmGateway, ModelConfig
from .workspace import read_json, write_json

DEFAULT_CHUNK_SIZE = 2048
DEFAULT_CHUNK_OVERLAP = 256
DEFAULT_THRESHOLD = 0.3
DEFAULT_TOP_K = 5


@dataclass
class Chunk:
    """A contiguous slice of an article's fulltext, optionally embedded."""

    arxiv_id: str
    chunk_index: int
    char_start: int
    char_end: int
    text: str
    vector: EmbeddingVector | None = None

    def __post_init__(self) -> None:
        if self.char_start >= self.char_end:
            raise PreconditionError(
                f"chunk {self.chunk_index}: empty window [{self.char_start}, {self.char_end})"
            )

    @property
    def chunk_id(self) -> str:
        return f"{self.arxiv_id}:{self.chunk_index}"


@dataclass(frozen=True)
class RetrievalResult:
    chunk: Chunk
    score: float


def chunk_fulltext(
    arxiv_id: str,
    text: str,
    size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_CHUNK_OVERLAP,
) -> list[Chunk]:
    """Slice text into overlapping windows of at most ``size`` chars.

    Stride is ``size - overlap``; the final window may be shorter and
    generation stops with the first window that reaches the end of the
    text. Empty text yields no chunks.
    """
    if size < 1:
        raise PreconditionError(f"size must be positive, got {size}")
    if not 0 <= overlap < size:
        raise PreconditionError(f"overlap must satisfy 0 <= overlap < size, got {overlap}")
    if not text:
        return []
    stride = size - overlap
    chunks: list[Chunk] = []
    start = 0
    while True:
        end = min(start + size, len(text))
        chunks.append(
            Chunk(
                arxiv_id=arxiv_id,
                chunk_index=len(chunks),
                char_start=start,
                char_end=end,
                text=text[start:end],
            )
        )
        if end == len(text):
            break
        start += stride
    return chunks


def cosine(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """Cosine similarity of two equal-dimension, non-zero vectors."""
    if u.dim != v.dim:
        raise PreconditionError(f"dim mismatch: {u.dim} vs {v.dim}")
    dot = 0.0
    nu = 0.0
    nv = 0.0
    for a, b in zip(u.values, v.values):
        dot += a * b
        nu += a * a
        nv += b * b
    if nu == 0.0 or nv == 0.0:
        raise PreconditionError("cosine is undefined for the zero vector")
    return dot / (math.sqrt(nu) * math.sqrt(nv))


class ChunkIndex:
    """Immutable in-memory index over embedded chunks of one article."""

    def __init__(self, chunks: list[Chunk]):
        dims = {c.vector.dim for c in chunks if c.vector is not None}
        if any(c.vector is None for c in chunks):
            raise PreconditionError("all chunks must be embedded before indexing")
        if len(dims) > 1:
            raise PreconditionError(f"chunks have mixed embedding dims {sorted(dims)}")
        self._chunks = tuple(chunks)
        self.dim = dims.pop() if dims else 0

    def __len__(self) -> int:
        return len(self._chunks)

    @property
    def chunks(self) -> tuple[Chunk, ...]:
        return self._chunks

    def search(self, query: EmbeddingVector, threshold: float, k: int) -> list[RetrievalResult]:
        """Top-k chunks with cosine >= threshold, score-descending.

        Ties break by ascending chunk_index so results are deterministic.
        """
        if not -1.0 <= threshold <= 1.0:
            raise PreconditionError(f"threshold must be in [-1, 1], got {threshold}")
        if k < 1:
            raise PreconditionError(f"k must be positive, got {k}")
        scored = [
            RetrievalResult(chunk=c, score=cosine(query, c.vector)) for c in self._chunks
        ]
        passing = [r for r in scored if r.score >= threshold]
        passing.sort(key=lambda r: (-r.score, r.chunk.chunk_index))
        return passing[:k]


def build_index(chunks: list[Chunk]) -> ChunkIndex:
    return ChunkIndex(chunks)


def embed_chunks(
    chunks: list[Chunk],
    gateway: LlmGateway,
    config: ModelConfig,
) -> list[Chunk]:
    """Embed all chunk texts in one gateway call."""
    if not chunks:
        return []
    vectors = gateway.embed([c.text for c in chunks], config)
    return [dataclasses.replace(c, vector=v) for c, v in zip(chunks, vectors)]


def retrieve(
    term: str,
    index: ChunkIndex,
    gateway: LlmGateway,
    config: ModelConfig,
    threshold: float = DEFAULT_THRESHOLD,
    k: int = DEFAULT_TOP_K,
) -> list[RetrievalResult]:
    """Embed the term and search the index.

    An empty result is not an error; it signals the no-context case to the
    definition stage.
    """
    if not term or not term.strip():
        raise PreconditionError("term must be non-empty")
    if len(index) == 0:
        return []
    query = gateway.embed([term], config)[0]
    return index.search(query, threshold, k)


# -- persistence ---------------------------------------------------------------


def save_chunks(path: Path, chunks: list[Chunk]) -> None:
    if not chunks:
        raise PreconditionError("refusing to save an empty chunk list")
    payload = {
        "arxiv_id": chunks[0].arxiv_id,
        "dim": chunks[0].vector.dim if chunks[0].vector else 0,
        "chunks": [
            {
                "chunk_index": c.chunk_index,
                "char_start": c.char_start,
                "char_end": c.char_end,
                "text": c.text,
                "vector": list(c.vector.values) if c.vector else None,
            }
            for c in chunks
        ],
    }
    write_json(path, payload)


def load_chunks(path: Path) -> list[Chunk]:
    payload = read_json(path)
    return [
        Chunk(
            arxiv_id=payload["arxiv_id"],
            chunk_index=c["chunk_index"],
            char_start=c["char_start"],
            char_end=c["char_end"],
            text=c["text"],
            vector=EmbeddingVector.of(c["vector"]) if c.get("vector") else None,
        )
        for c in payload["chunks"]
    ]
