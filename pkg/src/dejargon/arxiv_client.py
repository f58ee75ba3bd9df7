"""arXiv Atom query API client with pagination, rate limiting, and replay.

The export endpoint is polled page by page. A transport abstraction keeps
the feed fetch testable: `LiveFeedTransport` speaks HTTP with a global
minimum inter-request delay (the upstream host asks for 3 s between
requests), while `DirectoryFeedTransport` replays feed pages from XML files
on disk.
"""

from __future__ import annotations

import logging
import re
import threading
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Callable, Protocol

import requests

from .errors import FeedParseError, PreconditionError, RetryableTransportError

logger = logging.getLogger(__name__)

EXPORT_URL = "http://export.arxiv.org/api/query"
ATOM_NS = {
    "atom": "http://www.w3.org/2005/Atom",
    "arxiv": "http://arxiv.org/schemas/atom",
    "opensearch": "http://a9.com/-/spec/opensearch/1.1/",
}

CATEGORY_RE = re.compile(r"^[a-z][a-z-]*(\.[A-Za-z-]+)?$")
_VERSION_SUFFIX_RE = re.compile(r"v\d+$")


@dataclass(frozen=True)
class FeedEntry:
    """One parsed Atom entry (metadata only)."""

    arxiv_id: str
    title: str
    abstract: str
    primary_category: str
    all_categories: tuple[str, ...]
    comments: str | None
    published: date
    updated: date


@dataclass(frozen=True)
class FeedPage:
    entries: tuple[FeedEntry, ...]
    total_results: int


class FeedTransport(Protocol):
    def get_page(self, category: str, date_field: str, window: tuple[date, date], start: int, max_results: int) -> str:
        """Return raw Atom XML for one result page."""
        ...  # pragma: no cover


def _compact(text: str | None) -> str:
    return " ".join((text or "").split())


def _parse_date(value: str, entry_label: str) -> date:
    try:
        return datetime.strptime(value[:10], "%Y-%m-%d").date()
    except ValueError as exc:
        raise FeedParseError(f"bad timestamp {value!r}", entry=entry_label) from exc


def strip_version(raw_id: str) -> str:
    """Normalize an id URL or raw id to a versionless arXiv id."""
    tail = raw_id.rsplit("/abs/", 1)[-1].strip()
    return _VERSION_SUFFIX_RE.sub("", tail)


def parse_feed_page(xml_text: str) -> FeedPage:
    """Parse one Atom page; raises FeedParseError naming the bad entry."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise FeedParseError(f"feed is not well-formed XML: {exc}") from exc

    total_text = root.findtext("opensearch:totalResults", default="0", namespaces=ATOM_NS)
    try:
        total = int(total_text)
    except ValueError as exc:
        raise FeedParseError(f"bad totalResults {total_text!r}") from exc

    entries: list[FeedEntry] = []
    for pos, node in enumerate(root.findall("atom:entry", ATOM_NS)):
        raw_id = node.findtext("atom:id", default="", namespaces=ATOM_NS)
        label = strip_version(raw_id) or f"entry #{pos}"
        arxiv_id = strip_version(raw_id)
        title = _compact(node.findtext("atom:title", default="", namespaces=ATOM_NS))
        abstract = _compact(node.findtext("atom:summary", default="", namespaces=ATOM_NS))
        if not arxiv_id:
            raise FeedParseError("entry has no id", entry=label)
        if not abstract:
            raise FeedParseError("entry has empty abstract", entry=label)
        primary_node = node.find("arxiv:primary_category", ATOM_NS)
        primary = primary_node.get("term", "") if primary_node is not None else ""
        cats = tuple(c.get("term", "") for c in node.findall("atom:category", ATOM_NS) if c.get("term"))
        if not primary:
            primary = cats[0] if cats else ""
        if not primary:
            raise FeedParseError("entry has no category", entry=label)
        if primary not in cats:
            cats = (primary,) + cats
        comments = node.findtext("arxiv:comment", default=None, namespaces=ATOM_NS)
        published = _parse_date(
            node.findtext("atom:published", default="", namespaces=ATOM_NS), label
        )
        updated = _parse_date(node.findtext("atom:updated", default="", namespaces=ATOM_NS), label)
        entries.append(
            FeedEntry(
                arxiv_id=arxiv_id,
                title=title,
                abstract=abstract,
                primary_category=primary,
                all_categories=cats,
                comments=_compact(comments) or None,
                published=published,
                updated=updated,
            )
        )
    return FeedPage(entries=tuple(entries), total_results=total)


class LiveFeedTransport:
    """HTTP transport for the export endpoint.

    The inter-request delay is enforced process-wide (class-level state) so
    concurrent category fetches still respect the upstream rate limit.
    """

    _gate = threading.Lock()
    _last_request_at = 0.0

    def __init__(
        self,
        base_url: str = EXPORT_URL,
        min_delay_s: float = 3.0,
        timeout: float = 30.0,
        max_attempts: int = 3,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url
        self.min_delay_s = min_delay_s
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.sleep = sleep
        self.session = requests.Session()

    def _respect_delay(self) -> None:
        with LiveFeedTransport._gate:
            wait = LiveFeedTransport._last_request_at + self.min_delay_s - time.monotonic()
            if wait > 0:
                self.sleep(wait)
            LiveFeedTransport._last_request_at = time.monotonic()

    def get_page(self, category, date_field, window, start, max_results) -> str:
        field = "lastUpdatedDate" if date_field == "updated" else "submittedDate"
        lo = window[0].strftime("%Y%m%d") + "0000"
        hi = window[1].strftime("%Y%m%d") + "2359"
        params = {
            "search_query": f"cat:{category} AND {field}:[{lo} TO {hi}]",
            "start": start,
            "max_results": max_results,
            "sortBy": "lastUpdatedDate",
            "sortOrder": "ascending",
        }
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            self._respect_delay()
            try:
                resp = self.session.get(self.base_url, params=params, timeout=self.timeout)
                resp.raise_for_status()
                return resp.text
            except requests.RequestException as exc:
                last_error = exc
                logger.warning("feed fetch failed (attempt %d/%d): %s", attempt + 1, self.max_attempts, exc)
                if attempt + 1 < self.max_attempts:
                    self.sleep(2.0 * (attempt + 1))
        raise RetryableTransportError(f"feed fetch failed after {self.max_attempts} attempts: {last_error}")


class DirectoryFeedTransport:
    """Replays feed pages from ``{category}_{start}.xml`` files.

    A missing page file past the first page means the listing is exhausted.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def page_path(self, category: str, start: int) -> Path:
        return self.directory / f"{category}_{start}.xml"

    def get_page(self, category, date_field, window, start, max_results) -> str:
        path = self.page_path(category, start)
        if not path.exists():
            if start == 0:
                raise PreconditionError(f"no feed fixture for {category} at {path}")
            return _EMPTY_FEED
        return path.read_text(encoding="utf-8")


_EMPTY_FEED = (
    '<?xml version="1.0" encoding="UTF-8"?>'
    '<feed xmlns="http://www.w3.org/2005/Atom" '
    'xmlns:opensearch="http://a9.com/-/spec/opensearch/1.1/">'
    "<opensearch:totalResults>0</opensearch:totalResults></feed>"
)
