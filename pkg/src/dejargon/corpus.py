"""Harvest, filter, sample, and persist arXiv CS preprints.

The document store is a directory of one JSON file per article plus a
manifest carrying the test/dev split labels, so fixtures stay diff-able.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import random
import subprocess
import tempfile
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from .arxiv_client import CATEGORY_RE, FeedEntry, FeedTransport, parse_feed_page
from .errors import PreconditionError, StoreError
from .workspace import Workspace, read_json, write_json

logger = logging.getLogger(__name__)

FULLTEXT_ABSENT = "absent"
FULLTEXT_EXTRACTED = "extracted"
FULLTEXT_FAILED = "extraction_failed"

PAGE_SIZE = 100


@dataclass
class ArticleRecord:
    """One arXiv preprint: metadata, abstract, and optional fulltext."""

    arxiv_id: str
    title: str
    abstract: str
    primary_category: str
    all_categories: list[str]
    updated_at: date
    comments: str | None = None
    fulltext: str | None = None
    fulltext_status: str = FULLTEXT_ABSENT

    def __post_init__(self) -> None:
        if not self.arxiv_id:
            raise PreconditionError("arxiv_id must be non-empty")
        if not self.abstract:
            raise PreconditionError(f"article {self.arxiv_id} has an empty abstract")
        if self.primary_category not in self.all_categories:
            raise PreconditionError(
                f"article {self.arxiv_id}: primary category {self.primary_category!r} "
                f"not in {self.all_categories}"
            )

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["updated_at"] = self.updated_at.isoformat()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ArticleRecord":
        d = dict(d)
        d["updated_at"] = date.fromisoformat(d["updated_at"])
        return cls(**d)

    @classmethod
    def from_feed_entry(cls, entry: FeedEntry, date_field: str = "updated") -> "ArticleRecord":
        stamp = entry.updated if date_field == "updated" else entry.published
        return cls(
            arxiv_id=entry.arxiv_id,
            title=entry.title,
            abstract=entry.abstract,
            primary_category=entry.primary_category,
            all_categories=list(entry.all_categories),
            comments=entry.comments,
            updated_at=stamp,
        )


def fetch_listing(
    category: str,
    date_window: tuple[date, date],
    transport: FeedTransport,
    date_field: str = "updated",
    page_size: int = PAGE_SIZE,
) -> list[ArticleRecord]:
    """Fetch all listings for one category inside a date window.

    Paginates until the feed is exhausted, deduplicates on arxiv_id, and
    keeps only records that actually carry the category and whose windowed
    timestamp falls inside the (inclusive) range.
    """
    if not category or not CATEGORY_RE.match(category):
        raise PreconditionError(f"not a valid arXiv category: {category!r}")
    lo, hi = date_window
    if lo > hi:
        raise PreconditionError(f"empty date window: {lo} > {hi}")

    records: dict[str, ArticleRecord] = {}
    start = 0
    while True:
        xml_text = transport.get_page(category, date_field, (lo, hi), start, page_size)
        page = parse_feed_page(xml_text)
        for entry in page.entries:
            stamp = entry.updated if date_field == "updated" else entry.published
            if category not in entry.all_categories:
                continue
            if not (lo <= stamp <= hi):
                continue
            if entry.arxiv_id not in records:
                records[entry.arxiv_id] = ArticleRecord.from_feed_entry(entry, date_field)
        got = len(page.entries)
        start += got
        if got < page_size or (page.total_results and start >= page.total_results):
            break
    logger.info("fetched %d records for %s", len(records), category)
    return list(records.values())


def filter_peer_reviewed(
    records: list[ArticleRecord],
    keywords: tuple[str, ...] | list[str] | None = None,
) -> list[ArticleRecord]:
    """Keep records whose author comments self-report acceptance/publication.

    Matching is a case-insensitive substring check against the keyword
    ruleset; records without comments carry no evidence and are dropped.
    """
    from .config import DEFAULT_PEER_REVIEW_KEYWORDS

    rules = tuple(k.casefold() for k in (keywords or DEFAULT_PEER_REVIEW_KEYWORDS))
    kept = []
    for rec in records:
        if rec.comments and any(rule in rec.comments.casefold() for rule in rules):
            kept.append(rec)
    return kept


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def stratified_sample(
    records: list[ArticleRecord],
    fraction: float,
    seed: int,
) -> tuple[list[ArticleRecord], list[ArticleRecord]]:
    """Sample round(fraction * n) per primary-category stratum.

    Rounds half away from zero per stratum. Deterministic under a fixed
    seed regardless of input order; returns (test, dev) where dev is the
    unsampled remainder and the two partition the input.
    """
    if not records:
        raise PreconditionError("cannot sample an empty record list")
    if not 0 < fraction <= 1:
        raise PreconditionError(f"fraction must be in (0, 1], got {fraction}")
    for rec in records:
        if not rec.primary_category:
            raise PreconditionError(f"article {rec.arxiv_id} has no primary_category")

    strata: dict[str, list[ArticleRecord]] = {}
    for rec in records:
        strata.setdefault(rec.primary_category, []).append(rec)

    rng = random.Random(seed)
    chosen: set[str] = set()
    for cat in sorted(strata):
        members = sorted(strata[cat], key=lambda r: r.arxiv_id)
        k = _round_half_away(fraction * len(members))
        chosen.update(r.arxiv_id for r in rng.sample(members, k))

    test = [r for r in records if r.arxiv_id in chosen]
    dev = [r for r in records if r.arxiv_id not in chosen]
    return test, dev


def attach_fulltext(
    record: ArticleRecord,
    source: str | Path,
    converter: str | None = None,
) -> ArticleRecord:
    """Populate fulltext from a local file, converting when needed.

    Plain-text sources are read directly. Anything else goes through the
    configured converter command (``{src}``/``{dst}`` placeholders, e.g.
    ``pdftotext {src} {dst}``). Failures are recorded on the article as
    fulltext_status=extraction_failed rather than raised.
    """
    src = Path(source)
    try:
        if converter is None or src.suffix.lower() in (".txt", ".text", ""):
            text = src.read_text(encoding="utf-8", errors="replace")
        else:
            text = _run_converter(converter, src)
        if not text.strip():
            raise ValueError("extracted text is empty")
    except Exception as exc:
        logger.warning("fulltext extraction failed for %s: %s", record.arxiv_id, exc)
        return dataclasses.replace(record, fulltext=None, fulltext_status=FULLTEXT_FAILED)
    return dataclasses.replace(record, fulltext=text, fulltext_status=FULLTEXT_EXTRACTED)


def _run_converter(converter: str, src: Path) -> str:
    with tempfile.TemporaryDirectory() as tmp:
        dst = Path(tmp) / "out.txt"
        cmd = [part.format(src=str(src), dst=str(dst)) for part in converter.split()]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise RuntimeError(f"converter exited {proc.returncode}: {proc.stderr[:200]}")
        return dst.read_text(encoding="utf-8", errors="replace")


class CorpusStore:
    """File-backed article store with test/dev split labels."""

    def __init__(self, workspace: Workspace):
        self.workspace = workspace

    @staticmethod
    def _safe_id(arxiv_id: str) -> str:
        return arxiv_id.replace("/", "_")

    def article_path(self, arxiv_id: str) -> Path:
        return self.workspace.articles_dir / f"{self._safe_id(arxiv_id)}.json"

    def save(self, record: ArticleRecord) -> None:
        write_json(self.article_path(record.arxiv_id), record.to_dict())

    def save_many(self, records: list[ArticleRecord]) -> None:
        for rec in records:
            self.save(rec)

    def load(self, arxiv_id: str) -> ArticleRecord:
        path = self.article_path(arxiv_id)
        if not path.exists():
            raise StoreError(f"no stored article {arxiv_id}")
        return ArticleRecord.from_dict(read_json(path))

    def exists(self, arxiv_id: str) -> bool:
        return self.article_path(arxiv_id).exists()

    def load_all(self) -> list[ArticleRecord]:
        if not self.workspace.articles_dir.exists():
            return []
        records = [
            ArticleRecord.from_dict(read_json(p))
            for p in sorted(self.workspace.articles_dir.glob("*.json"))
        ]
        return sorted(records, key=lambda r: r.arxiv_id)

    # -- split labels --------------------------------------------------------

    def set_split_labels(self, labels: dict[str, str], fraction: float, seed: int) -> None:
        for arxiv_id, label in labels.items():
            if label not in ("test", "dev"):
                raise PreconditionError(f"bad split label {label!r} for {arxiv_id}")
            if not self.exists(arxiv_id):
                raise StoreError(f"split label refers to unknown article {arxiv_id}")
        write_json(
            self.workspace.manifest_path,
            {"split_labels": labels, "fraction": fraction, "seed": seed},
        )

    def split_labels(self) -> dict[str, str]:
        if not self.workspace.manifest_path.exists():
            return {}
        labels = read_json(self.workspace.manifest_path)["split_labels"]
        missing = [a for a in labels if not self.exists(a)]
        if missing:
            raise StoreError(f"manifest references missing articles: {missing[:5]}")
        return labels

    def load_split(self, split: str) -> list[ArticleRecord]:
        labels = self.split_labels()
        return [r for r in self.load_all() if labels.get(r.arxiv_id) == split]
