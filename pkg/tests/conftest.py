"""Shared fixtures: synthetic feeds, stub embeddings, and replay caches."""

from __future__ import annotations

import dataclasses
import hashlib
import random
from datetime import date
from pathlib import Path
from xml.sax.saxutils import escape

import pytest

from dejargon.config import AppConfig
from dejargon.corpus import ArticleRecord
from dejargon.jargon_id import ground_terms, normalize_term, parse_term_reply
from dejargon.llm_gateway import (
    EmbeddingVector,
    ModelConfig,
    chat_request,
    embed_request,
    write_fixture,
)
from dejargon.profiles import ReaderProfile, render_definition_prompt, render_identification_prompt
from dejargon.retrieval import build_index, chunk_fulltext
from dejargon.workspace import Workspace

# Annotator profiles mirroring the reference study's two readers.
RID0_DESCRIPTION = (
    "PhD student and researcher in Human-Computer Interaction and Artificial "
    "Intelligence. The reader has a few papers in top-tier conferences where they "
    "used their knowledge of Natural Language Processing, Machine Learning, HCI "
    "and software engineering to build and evaluate interactive systems."
)
RID1_DESCRIPTION = (
    "Sophomore in Computer Science, with experience in Software Engineering. The "
    "reader has taken a few courses and worked on some class projects in Machine "
    "Learning and Software Engineering, and is interested in learning more about "
    "the fields."
)


def make_profile(reader_id: str) -> ReaderProfile:
    descriptions = {"rid0": RID0_DESCRIPTION, "rid1": RID1_DESCRIPTION}
    return ReaderProfile(
        reader_id=reader_id,
        description=descriptions.get(reader_id, f"Reader {reader_id} with general CS background."),
        expertise_areas=["AI", "HCI", "Computer Science"],
        ratings={"AI": 3, "HCI": 4} if reader_id == "rid0" else None,
    )


# -- Atom feed builders ----------------------------------------------------------


def feed_entry_xml(
    arxiv_id: str,
    title: str = "A Title",
    abstract: str = "An abstract about systems.",
    primary: str = "cs.HC",
    categories: tuple[str, ...] = ("cs.HC",),
    comments: str | None = None,
    published: str = "2024-03-05",
    updated: str = "2024-03-10",
) -> str:
    cats = "".join(f'<category term="{c}"/>' for c in categories)
    comment_xml = f"<arxiv:comment>{escape(comments)}</arxiv:comment>" if comments else ""
    return (
        "<entry>"
        f"<id>http://arxiv.org/abs/{arxiv_id}v1</id>"
        f"<title>{escape(title)}</title>"
        f"<summary>{escape(abstract)}</summary>"
        f"<published>{published}T08:00:00Z</published>"
        f"<updated>{updated}T08:00:00Z</updated>"
        f"{comment_xml}"
        f'<arxiv:primary_category term="{primary}"/>'
        f"{cats}"
        "</entry>"
    )


def feed_xml(entries: list[str], total: int | None = None) -> str:
    total_n = len(entries) if total is None else total
    return (
        '<?xml version="1.0" encoding="UTF-8"?>'
        '<feed xmlns="http://www.w3.org/2005/Atom" '
        'xmlns:opensearch="http://a9.com/-/spec/opensearch/1.1/" '
        'xmlns:arxiv="http://arxiv.org/schemas/atom">'
        f"<opensearch:totalResults>{total_n}</opensearch:totalResults>"
        + "".join(entries)
        + "</feed>"
    )


class ListFeedTransport:
    """Serves pre-built feed pages keyed by (category, start)."""

    def __init__(self, pages: dict[tuple[str, int], str]):
        self.pages = pages
        self.calls = 0

    def get_page(self, category, date_field, window, start, max_results):
        self.calls += 1
        empty = feed_xml([], total=0)
        return self.pages.get((category, start), empty)


# -- deterministic embeddings -------------------------------------------------------


def stub_vector(text: str, dim: int = 8) -> list[float]:
    """Unit vector derived only from the text content; stable across runs."""
    seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")
    rng = random.Random(seed)
    raw = [rng.uniform(-1.0, 1.0) for _ in range(dim)]
    norm = sum(v * v for v in raw) ** 0.5
    return [v / norm for v in raw]


def stub_embedding(text: str, dim: int = 8) -> EmbeddingVector:
    return EmbeddingVector.of(stub_vector(text, dim))


# -- pipeline fixture corpus ----------------------------------------------------------

FIXTURE_SPECS = [
    {
        "arxiv_id": "2403.10001",
        "title": "Adaptive Reading Interfaces for Scientific Text",
        "abstract": (
            "We study adaptive reading interfaces that reorganize scientific text in "
            "response to gaze. Our system uses saccade-contingent rendering together "
            "with mixed-initiative interaction to pace readers through dense passages, "
            "and we evaluate comprehension outcomes across two lab studies."
        ),
        "primary": "cs.HC",
        "categories": ("cs.HC", "cs.AI"),
        "comments": "Accepted at CHI 2024",
        "terms": {
            "rid0": ["saccade-contingent rendering"],
            "rid1": ["saccade-contingent rendering", "mixed-initiative interaction"],
        },
    },
    {
        "arxiv_id": "2403.10002",
        "title": "Planning with Constraint-Aware Tree Search",
        "abstract": (
            "We present a planner that couples gradient-free search with a learned "
            "policy network. The planner applies dual ascent on constraint multipliers "
            "and prunes infeasible branches early, improving success rates on "
            "long-horizon tasks without extra supervision."
        ),
        "primary": "cs.AI",
        "categories": ("cs.AI",),
        "comments": "To appear in AAAI 2024",
        "terms": {
            "rid0": ["dual ascent"],
            "rid1": ["policy network", "dual ascent", "a term nobody wrote"],
        },
    },
    {
        "arxiv_id": "2403.10003",
        "title": "Auditing Public-Sector Algorithm Procurement",
        "abstract": (
            "Government agencies increasingly buy predictive systems. We analyze "
            "algorithmic impact assessment practice across 14 agencies and introduce "
            "procurement audit trails that record vendor claims, to support external "
            "scrutiny of deployed systems."
        ),
        "primary": "cs.CY",
        "categories": ("cs.CY",),
        "comments": "Published in Proceedings of FAccT 2024",
        "terms": {
            "rid0": ["algorithmic impact assessment"],
            "rid1": ["algorithmic impact assessment", "procurement audit trails"],
        },
    },
    {
        "arxiv_id": "2403.10004",
        "title": "Rendering Virtual Textures on Flat Screens",
        "abstract": (
            "Touchscreens can simulate material feel. We compare haptic texture "
            "rendering driven by electrovibration against mechanical actuation, and "
            "report perception thresholds from a 24-participant study."
        ),
        "primary": "cs.HC",
        "categories": ("cs.HC",),
        "comments": "Camera-ready version; 12 pages",
        "terms": {
            "rid0": ["electrovibration"],
            "rid1": ["haptic texture rendering", "electrovibration"],
        },
    },
    {
        "arxiv_id": "2403.10005",
        "title": "Serving Sparse Language Models on Commodity Hardware",
        "abstract": (
            "Serving large models is costly. We combine speculative decoding with "
            "mixture-of-experts routing to cut latency on commodity accelerators, "
            "and show a 2.3x throughput gain at matched quality."
        ),
        "primary": "cs.AI",
        "categories": ("cs.AI", "cs.HC"),
        "comments": "Accepted to MLSys 2024",
        "terms": {
            "rid0": ["speculative decoding"],
            "rid1": ["speculative decoding", "mixture-of-experts routing"],
        },
    },
    {
        "arxiv_id": "2403.10006",
        "title": "Privacy Budgets for Municipal Data Releases",
        "abstract": (
            "Cities publish mobility statistics. We propose allocating a differential "
            "privacy budget across recurring releases and contrast it with k-anonymity "
            "baselines, quantifying utility loss over a year of publications."
        ),
        "primary": "cs.CY",
        "categories": ("cs.CY", "cs.HC"),
        "comments": "10 pages, 3 figures",  # not peer reviewed; dropped by the filter
        "terms": {
            "rid0": ["differential privacy budget"],
            "rid1": ["k-anonymity"],
        },
    },
    {
        "arxiv_id": "2403.10007",
        "title": "Crowdsourced Repair of Transit Accessibility Data",
        "abstract": (
            "Accessibility metadata for transit stops is often stale. We deploy a "
            "crowdsourcing pipeline with reputation weighting and conflict "
            "resolution heuristics, doubling verified coverage in three months."
        ),
        "primary": "cs.CY",
        "categories": ("cs.CY",),
        "comments": "Accepted at ASSETS 2024",
        "terms": {
            "rid0": ["reputation weighting"],
            "rid1": ["reputation weighting", "conflict resolution heuristics"],
        },
    },
]


def fixture_fulltext(spec: dict) -> str:
    """Fulltext: the abstract plus sections elaborating each candidate term."""
    sections = [spec["abstract"]]
    seen: set[str] = set()
    for terms in spec["terms"].values():
        for term in terms:
            if term in seen:
                continue
            seen.add(term)
            sections.append(
                f"Section on {term}. In this work, {term} plays a central role. "
                f"We describe how {term} is implemented, measured, and compared against "
                f"standard baselines, with ablations that isolate the effect of {term} "
                f"on the reported outcomes. " * 3
            )
    return "\n\n".join(sections)


def fixture_reply(spec: dict, reader_id: str) -> str:
    terms = spec["terms"][reader_id]
    return "\n".join(f"{i + 1}. {t}" for i, t in enumerate(terms))


def fixture_records(specs=None) -> list[ArticleRecord]:
    out = []
    for spec in specs or FIXTURE_SPECS:
        out.append(
            ArticleRecord(
                arxiv_id=spec["arxiv_id"],
                title=spec["title"],
                abstract=spec["abstract"],
                primary_category=spec["primary"],
                all_categories=list(spec["categories"]),
                comments=spec["comments"],
                updated_at=date(2024, 3, 10),
            )
        )
    return out


def write_feed_fixtures(feed_dir: Path, specs=None) -> None:
    """One feed page per category covering every fixture article."""
    specs = specs or FIXTURE_SPECS
    by_category: dict[str, list[str]] = {}
    for spec in specs:
        entry = feed_entry_xml(
            spec["arxiv_id"],
            title=spec["title"],
            abstract=spec["abstract"],
            primary=spec["primary"],
            categories=spec["categories"],
            comments=spec["comments"],
        )
        for cat in spec["categories"]:
            by_category.setdefault(cat, []).append(entry)
    feed_dir.mkdir(parents=True, exist_ok=True)
    for cat, entries in by_category.items():
        (feed_dir / f"{cat}_0.xml").write_text(feed_xml(entries), encoding="utf-8")


def definition_text(term: str, flavor: str) -> str:
    return (
        f"'{term}' names a specific technique in this study ({flavor} explanation): "
        f"in plain language, it is the mechanism the authors rely on for this part of "
        f"the work, described here without jargon."
    )


def build_replay_fixtures(workspace: Workspace, cfg: AppConfig, reader_order=("rid0", "rid1")) -> float:
    """Pre-seed the LLM replay cache for the whole pipeline run.

    Returns the retrieval threshold to use so that some terms retrieve
    context and at least one does not (exercising the no-context path).
    """
    fixtures = workspace.llm_fixtures_dir
    fixtures.mkdir(parents=True, exist_ok=True)
    model_cfg = cfg.model_config()
    specs = [s for s in FIXTURE_SPECS if _peer_reviewed(s, cfg)]

    # identification replies
    for spec in specs:
        for rid in reader_order:
            bundle = render_identification_prompt(
                make_profile(rid),
                spec["abstract"],
                model_config=model_cfg,
                sentinel=cfg.no_jargon_sentinel,
            )
            write_fixture(fixtures, chat_request(bundle, model_cfg), {"text": fixture_reply(spec, rid)})

    # chunk embeddings (one batched call per article) and local indices
    indices = {}
    for spec in specs:
        chunks = chunk_fulltext(
            spec["arxiv_id"], fixture_fulltext(spec), size=cfg.chunk_size, overlap=cfg.chunk_overlap
        )
        texts = [c.text for c in chunks]
        write_fixture(
            fixtures,
            embed_request(texts, model_cfg),
            {"embeddings": [stub_vector(t) for t in texts]},
        )
        embedded = [dataclasses.replace(c, vector=stub_embedding(t)) for c, t in zip(chunks, texts)]
        indices[spec["arxiv_id"]] = build_index(embedded)

    # term units in the same order the define step gathers them
    units: dict[tuple[str, str], str] = {}
    for rid in reader_order:
        for spec in specs:
            terms = parse_term_reply(fixture_reply(spec, rid), sentinel=cfg.no_jargon_sentinel)
            grounded, _, _ = ground_terms(spec["abstract"], terms)
            for t in grounded:
                units.setdefault((spec["arxiv_id"], normalize_term(t)), t)

    # term embeddings + threshold that splits retrieved / no-context
    max_scores = []
    for (arxiv_id, _), term in sorted(units.items()):
        write_fixture(
            fixtures,
            embed_request([term], model_cfg),
            {"embeddings": [stub_vector(term)]},
        )
        hits = indices[arxiv_id].search(stub_embedding(term), threshold=-1.0, k=1)
        max_scores.append(hits[0].score if hits else -1.0)
    ordered = sorted(max_scores)
    threshold = (ordered[0] + ordered[-1]) / 2.0  # splits the range: some hit, some miss

    # definition replies for both context modes
    for (arxiv_id, _), term in sorted(units.items()):
        spec = next(s for s in specs if s["arxiv_id"] == arxiv_id)
        b_abs = render_definition_prompt(term, spec["abstract"], mode="abstract_only", model_config=model_cfg)
        write_fixture(fixtures, chat_request(b_abs, model_cfg), {"text": definition_text(term, "short")})
        hits = indices[arxiv_id].search(stub_embedding(term), threshold=threshold, k=cfg.retrieval_k)
        if hits:
            snippets = [h.chunk.text for h in hits]
            b_rag = render_definition_prompt(term, snippets, mode="rag", model_config=model_cfg)
            write_fixture(fixtures, chat_request(b_rag, model_cfg), {"text": definition_text(term, "expanded")})
    return threshold


def _peer_reviewed(spec: dict, cfg: AppConfig) -> bool:
    comments = spec["comments"] or ""
    return any(k in comments.casefold() for k in cfg.peer_review_keywords)


@pytest.fixture
def workspace(tmp_path) -> Workspace:
    ws = Workspace(tmp_path / "store")
    ws.ensure_layout()
    return ws


@pytest.fixture
def model_config() -> ModelConfig:
    return ModelConfig()
