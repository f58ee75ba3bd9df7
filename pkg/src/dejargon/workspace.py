"""On-disk layout of a data workspace plus small JSON/JSONL helpers.

Everything the pipeline produces lives under one root directory so the CLI,
the HTTP server, and the tests all agree on where artifacts are.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Iterable, Iterator


class Workspace:
    """Paths for one corpus-plus-artifacts directory tree."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    # -- corpus ----------------------------------------------------------
    @property
    def articles_dir(self) -> Path:
        return self.root / "articles"

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    # -- profiles / prompts ----------------------------------------------
    @property
    def profiles_dir(self) -> Path:
        return self.root / "profiles"

    # -- model artifacts ---------------------------------------------------
    @property
    def annotations_dir(self) -> Path:
        return self.root / "annotations"

    @property
    def chunks_dir(self) -> Path:
        return self.root / "chunks"

    @property
    def definitions_path(self) -> Path:
        return self.root / "definitions" / "definitions.jsonl"

    @property
    def pairs_path(self) -> Path:
        return self.root / "pairs" / "pairs.jsonl"

    @property
    def pairs_key_path(self) -> Path:
        return self.root / "pairs" / "pairs.key.json"

    @property
    def judgments_path(self) -> Path:
        return self.root / "judgments" / "judgments.jsonl"

    # -- infrastructure ----------------------------------------------------
    @property
    def llm_fixtures_dir(self) -> Path:
        return self.root / "fixtures" / "llm"

    @property
    def traces_dir(self) -> Path:
        return self.root / "traces"

    @property
    def config_path(self) -> Path:
        return self.root / "config.json"

    def ensure_layout(self) -> None:
        for d in (
            self.articles_dir,
            self.profiles_dir,
            self.annotations_dir,
            self.chunks_dir,
            self.definitions_path.parent,
            self.pairs_path.parent,
            self.judgments_path.parent,
            self.llm_fixtures_dir,
            self.traces_dir,
        ):
            d.mkdir(parents=True, exist_ok=True)

    def annotations_path(self, source: str, reader_id: str) -> Path:
        return self.annotations_dir / f"{source}_{reader_id}.jsonl"


def write_json(path: Path, payload: Any) -> None:
    """Write JSON atomically (tmp file + rename) so readers never see a torn file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def read_json(path: Path) -> Any:
    return json.loads(path.read_text(encoding="utf-8"))


def append_jsonl(path: Path, rows: Iterable[dict]) -> int:
    """Append rows to a JSONL file; returns the number of rows written."""
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("a", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
            n += 1
    return n


def read_jsonl(path: Path) -> Iterator[dict]:
    if not path.exists():
        return
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)
