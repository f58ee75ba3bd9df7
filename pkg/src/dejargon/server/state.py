"""File-backed read model for the HTTP API.

The server never owns data: it mirrors the JSON/JSONL stores written by
the pipeline into an in-memory snapshot, rebuilt whenever any backing
file changes. Judgment writes are serialized through a single lock and
flow into the same append-only store the CLI uses.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path

from ..corpus import ArticleRecord, CorpusStore
from ..definitions import METHOD_ABSTRACT, METHOD_RAG, STATUS_NO_CONTEXT, Definition
from ..errors import StoreError
from ..evaluation import JudgmentRecord, append_judgments, load_judgments
from ..jargon_id import JargonAnnotation, normalize_term
from ..pipeline import load_annotations, load_definitions
from ..profiles import ProfileStore, ReaderProfile
from ..workspace import Workspace, read_jsonl


@dataclass
class Snapshot:
    articles: dict[str, ArticleRecord] = field(default_factory=dict)
    split_labels: dict[str, str] = field(default_factory=dict)
    known_categories: set[str] = field(default_factory=set)
    profiles: dict[str, ReaderProfile] = field(default_factory=dict)
    annotations: dict[tuple[str, str], JargonAnnotation] = field(default_factory=dict)
    definitions: dict[tuple[str, str, str], Definition] = field(default_factory=dict)
    pairs: dict[str, dict] = field(default_factory=dict)
    judged: set[tuple[str, str]] = field(default_factory=set)


class StateStore:
    """Snapshot cache over one workspace, refreshed on file change."""

    def __init__(self, workspace: Workspace):
        self.workspace = workspace
        self._lock = threading.Lock()
        self._snapshot: Snapshot | None = None
        self._signature: tuple | None = None

    # -- snapshot lifecycle ------------------------------------------------

    def _files_signature(self) -> tuple:
        ws = self.workspace
        tracked: list[Path] = [ws.manifest_path, ws.definitions_path, ws.pairs_path, ws.judgments_path]
        for directory in (ws.articles_dir, ws.profiles_dir, ws.annotations_dir):
            if directory.exists():
                tracked.extend(sorted(directory.glob("*")))
        sig = []
        for path in tracked:
            if path.exists():
                st = path.stat()
                sig.append((str(path), st.st_mtime_ns, st.st_size))
        return tuple(sig)

    def snapshot(self) -> Snapshot:
        sig = self._files_signature()
        with self._lock:
            if self._snapshot is None or sig != self._signature:
                self._snapshot = self._build()
                self._signature = sig
            return self._snapshot

    def _build(self) -> Snapshot:
        ws = self.workspace
        snap = Snapshot()
        store = CorpusStore(ws)
        for rec in store.load_all():
            snap.articles[rec.arxiv_id] = rec
            snap.known_categories.update(rec.all_categories)
        if ws.manifest_path.exists():
            snap.split_labels = store.split_labels()
        for prof in ProfileStore(ws).load_all():
            snap.profiles[prof.reader_id] = prof
        if ws.annotations_dir.exists():
            for path in sorted(ws.annotations_dir.glob("model_*.jsonl")):
                for ann in load_annotations(path):
                    snap.annotations[(ann.arxiv_id, ann.reader_id)] = ann
        if ws.definitions_path.exists():
            for d in load_definitions(ws.definitions_path):
                snap.definitions[(d.arxiv_id, normalize_term(d.term), d.method)] = d
        if ws.pairs_path.exists():
            for row in read_jsonl(ws.pairs_path):
                snap.pairs[row["pair_id"]] = row
        if ws.judgments_path.exists():
            snap.judged = {(r.pair_id, r.reader_id) for r in load_judgments(ws.judgments_path)}
        return snap

    # -- queries -------------------------------------------------------------

    def jargon_for(self, arxiv_id: str, reader_id: str, method: str) -> list[dict]:
        """Grounded terms with the definition served by the requested method."""
        snap = self.snapshot()
        ann = snap.annotations.get((arxiv_id, reader_id))
        if ann is None:
            raise KeyError("annotation")
        entries = []
        for term, span in zip(ann.terms, ann.spans):
            d = snap.definitions.get((arxiv_id, normalize_term(term), method))
            if d is None:
                status, text = "missing", None
            elif d.status == STATUS_NO_CONTEXT:
                status, text = STATUS_NO_CONTEXT, None
            else:
                status, text = "ok", d.text
            entries.append(
                {
                    "term": term,
                    "span": {"start": span[0], "end": span[1]},
                    "definition": text,
                    "method": method,
                    "status": status,
                }
            )
        return entries

    def pending_pairs(self, reader_id: str) -> list[dict]:
        snap = self.snapshot()
        return [
            row for pid, row in sorted(snap.pairs.items()) if (pid, reader_id) not in snap.judged
        ]

    # -- writes ----------------------------------------------------------------

    def record_judgment(self, record: JudgmentRecord) -> None:
        """Append one judgment; raises on duplicates or unknown pairs."""
        snap = self.snapshot()
        if record.pair_id not in snap.pairs:
            raise KeyError(record.pair_id)
        with self._lock:
            existing = {(r.pair_id, r.reader_id) for r in load_judgments(self.workspace.judgments_path)}
            if (record.pair_id, record.reader_id) in existing:
                raise StoreError(f"pair {record.pair_id} already judged by {record.reader_id}")
            append_judgments(self.workspace.judgments_path, [record])
            self._snapshot = None  # force rebuild on next read
            self._signature = None

    def valid_method(self, method: str) -> bool:
        return method in (METHOD_ABSTRACT, METHOD_RAG)
