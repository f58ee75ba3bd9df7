"""Batch orchestration over a workspace: the steps behind each CLI command.

Every step iterates in sorted order and rewrites its output file wholesale
(judgments excepted, which are append-only), so a fixed workspace plus
replay fixtures reproduces byte-identical artifacts.
"""

from __future__ import annotations

import csv
import logging
from datetime import date
from pathlib import Path

from .arxiv_client import FeedTransport
from .config import AppConfig
from .corpus import (
    FULLTEXT_EXTRACTED,
    ArticleRecord,
    CorpusStore,
    fetch_listing,
    filter_peer_reviewed,
    stratified_sample,
)
from .definitions import (
    METHOD_ABSTRACT,
    METHOD_RAG,
    Definition,
    PairAssembly,
    UnblindKeyStore,
    assemble_pairs,
    define_abstract_only,
    define_rag,
)
from .errors import DegenerateSampleError, PreconditionError, StoreError
from .evaluation import (
    JudgmentRecord,
    accuracy_summary,
    paired_count_sample,
    term_length_samples,
    win_loss_tie,
)
from .jargon_id import JargonAnnotation, count_report, identify_jargon, normalize_term, score
from .llm_gateway import LlmGateway
from .profiles import ProfileStore
from .retrieval import build_index, chunk_fulltext, embed_chunks, load_chunks, save_chunks
from .stats import mann_whitney_u, wilcoxon_signed_rank
from .workspace import Workspace, append_jsonl, read_jsonl

logger = logging.getLogger(__name__)


def _write_jsonl(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("", encoding="utf-8")
    append_jsonl(path, rows)


# -- corpus steps ---------------------------------------------------------------


def run_ingest(
    workspace: Workspace,
    config: AppConfig,
    categories: list[str],
    window: tuple[date, date],
    transport: FeedTransport,
    peer_reviewed_only: bool = True,
) -> dict[str, int]:
    """Fetch listings for every category, filter, and persist. Returns per-category kept counts."""
    store = CorpusStore(workspace)
    merged: dict[str, ArticleRecord] = {}
    per_category: dict[str, int] = {}
    for category in categories:
        records = fetch_listing(category, window, transport, date_field=config.date_field)
        if peer_reviewed_only:
            records = filter_peer_reviewed(records, config.peer_review_keywords)
        per_category[category] = len(records)
        for rec in records:
            merged.setdefault(rec.arxiv_id, rec)
    store.save_many(sorted(merged.values(), key=lambda r: r.arxiv_id))
    logger.info("ingested %d unique articles", len(merged))
    return per_category


def run_sample(workspace: Workspace, fraction: float, seed: int) -> tuple[int, int]:
    """Stratified-sample the stored corpus into test/dev split labels."""
    store = CorpusStore(workspace)
    records = store.load_all()
    test, dev = stratified_sample(records, fraction, seed)
    labels = {r.arxiv_id: "test" for r in test}
    labels.update({r.arxiv_id: "dev" for r in dev})
    store.set_split_labels(labels, fraction, seed)
    return len(test), len(dev)


# -- jargon identification ---------------------------------------------------------


def run_identify(
    workspace: Workspace,
    gateway: LlmGateway,
    config: AppConfig,
    reader_id: str,
    split: str = "test",
) -> Path:
    """Identify jargon for every article in a split, for one reader."""
    store = CorpusStore(workspace)
    profile = ProfileStore(workspace).load(reader_id)
    articles = store.load_split(split)
    if not articles:
        raise StoreError(f"no articles in split {split!r}; run ingest/sample first")
    annotations = []
    for article in articles:
        ann = identify_jargon(
            profile,
            article,
            gateway,
            model_config=config.model_config(),
            sentinel=config.no_jargon_sentinel,
        )
        annotations.append(ann.to_dict())
    out = workspace.annotations_path("model", reader_id)
    _write_jsonl(out, annotations)
    return out


def load_annotations(path: Path) -> list[JargonAnnotation]:
    return [JargonAnnotation.from_dict(row) for row in read_jsonl(path)]


# -- retrieval indexing -------------------------------------------------------------


def run_index(
    workspace: Workspace,
    gateway: LlmGateway,
    config: AppConfig,
    arxiv_ids: list[str] | None = None,
) -> list[str]:
    """Chunk and embed fulltext for the given articles (default: all with fulltext)."""
    store = CorpusStore(workspace)
    articles = store.load_all() if arxiv_ids is None else [store.load(a) for a in arxiv_ids]
    indexed = []
    for article in articles:
        if article.fulltext_status != FULLTEXT_EXTRACTED or not article.fulltext:
            if arxiv_ids is not None:
                raise PreconditionError(f"article {article.arxiv_id} has no extracted fulltext")
            continue
        chunks = chunk_fulltext(
            article.arxiv_id, article.fulltext, size=config.chunk_size, overlap=config.chunk_overlap
        )
        if not chunks:
            continue
        chunks = embed_chunks(chunks, gateway, config.model_config())
        save_chunks(workspace.chunks_dir / f"{article.arxiv_id.replace('/', '_')}.json", chunks)
        indexed.append(article.arxiv_id)
    return indexed


# -- definitions ---------------------------------------------------------------------


def gather_terms(
    workspace: Workspace,
    reader_ids: list[str],
    source: str,
) -> dict[tuple[str, str], str]:
    """Collect (arxiv_id, normalized term) -> surface term across readers' annotations."""
    units: dict[tuple[str, str], str] = {}
    for reader_id in reader_ids:
        path = workspace.annotations_path(source, reader_id)
        for ann in load_annotations(path):
            for term in ann.terms:
                units.setdefault((ann.arxiv_id, normalize_term(term)), term)
    return units


def run_define(
    workspace: Workspace,
    gateway: LlmGateway,
    config: AppConfig,
    reader_ids: list[str],
    source: str = "model",
    methods: tuple[str, ...] = (METHOD_ABSTRACT, METHOD_RAG),
) -> Path:
    """Generate definitions for every (article, term) unit from the given annotations."""
    store = CorpusStore(workspace)
    units = gather_terms(workspace, reader_ids, source)
    if not units:
        raise StoreError(f"no annotated terms found for readers {reader_ids} (source={source})")

    rows: list[dict] = []
    trace_rows: list[dict] = []
    model_cfg = config.model_config()
    for (arxiv_id, _), term in sorted(units.items()):
        article = store.load(arxiv_id)
        if METHOD_ABSTRACT in methods:
            rows.append(define_abstract_only(term, article, gateway, model_cfg).to_dict())
        if METHOD_RAG in methods:
            chunk_path = workspace.chunks_dir / f"{arxiv_id.replace('/', '_')}.json"
            if not chunk_path.exists():
                raise StoreError(f"no chunk index for {arxiv_id}; run index first")
            index = build_index(load_chunks(chunk_path))
            d = define_rag(
                term,
                article,
                index,
                gateway,
                model_cfg,
                threshold=config.retrieval_threshold,
                k=config.retrieval_k,
                include_abstract=config.rag_include_abstract,
            )
            rows.append(d.to_dict())
            trace_rows.append(
                {
                    "arxiv_id": arxiv_id,
                    "term": term,
                    "status": d.status,
                    "context_used": d.context_used,
                    "threshold": config.retrieval_threshold,
                }
            )
    _write_jsonl(workspace.definitions_path, rows)
    if trace_rows:
        append_jsonl(workspace.traces_dir / "retrieval.jsonl", trace_rows)
    return workspace.definitions_path


def load_definitions(path: Path) -> list[Definition]:
    return [Definition.from_dict(row) for row in read_jsonl(path)]


def run_pairs(workspace: Workspace, seed: int) -> PairAssembly:
    """Assemble the blinded pair export and its separate key file."""
    definitions = load_definitions(workspace.definitions_path)
    if not definitions:
        raise StoreError("no definitions found; run define first")
    assembly = assemble_pairs(definitions, seed)
    _write_jsonl(workspace.pairs_path, list(assembly.blinded_rows))
    assembly.key_store.save(workspace.pairs_key_path)
    return assembly


# -- evaluation outputs ----------------------------------------------------------------


def _fmt(x: float | None, places: int = 4) -> str:
    return "" if x is None else f"{x:.{places}f}"


def write_score_csv(
    out_path: Path,
    pred_annotations: list[JargonAnnotation],
    gold_annotations: list[JargonAnnotation],
    policy: str = "exact",
) -> dict[str, float]:
    """Per-article P/R/F2 against gold, with medians in the footer rows.

    Undefined metrics are left empty and excluded from the medians
    (recall medians condition on units where the gold set is non-empty).
    """
    gold_by_unit = {(g.arxiv_id, g.reader_id): g for g in gold_annotations}
    rows = []
    for pred in sorted(pred_annotations, key=lambda a: (a.arxiv_id, a.reader_id)):
        gold = gold_by_unit.get((pred.arxiv_id, pred.reader_id))
        if gold is None:
            continue
        report = score(pred, gold, policy=policy)
        rows.append((pred, report))
    if not rows:
        raise PreconditionError("no overlapping (article, reader) units between pred and gold")

    from .stats import descriptives

    medians = {}
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["arxiv_id", "reader_id", "tp", "fp", "fn", "precision", "recall", "f2"])
        for pred, rep in rows:
            writer.writerow(
                [
                    pred.arxiv_id,
                    pred.reader_id,
                    rep.tp,
                    rep.fp,
                    rep.fn,
                    _fmt(rep.precision),
                    _fmt(rep.recall),
                    _fmt(rep.f2),
                ]
            )
        for metric in ("precision", "recall", "f2"):
            values = [getattr(rep, metric) for _, rep in rows]
            defined = [v for v in values if v is not None]
            med = descriptives(defined).median if defined else None
            medians[metric] = med
            writer.writerow(["median", "", "", "", "", *_metric_cells(metric, med)])
    return medians


def _metric_cells(metric: str, value: float | None) -> list[str]:
    cells = {"precision": 0, "recall": 1, "f2": 2}
    row = ["", "", ""]
    row[cells[metric]] = _fmt(value)
    return row


def write_accuracy_csv(out_path: Path, judgments: list[JudgmentRecord], keys: UnblindKeyStore) -> None:
    summary = accuracy_summary(judgments, keys)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "n", "correct", "incorrect", "missing", "correct_pct", "incorrect_pct", "missing_pct"])
        for method in sorted(summary):
            s = summary[method]
            writer.writerow(
                [method, s.n, s.correct, s.incorrect, s.missing,
                 f"{s.correct_pct:.1f}", f"{s.incorrect_pct:.1f}", f"{s.missing_pct:.1f}"]
            )


def write_quality_csv(out_path: Path, judgments: list[JudgmentRecord], keys: UnblindKeyStore) -> None:
    table = win_loss_tie(judgments, keys)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scope", "method", "n", "wins", "losses", "ties", "win_pct", "loss_pct", "tie_pct"])
        for row in table.rows:
            writer.writerow(
                [row.scope, row.method, row.n, row.wins, row.losses, row.ties,
                 f"{row.win_pct:.1f}", f"{row.loss_pct:.1f}", f"{row.tie_pct:.1f}"]
            )
        writer.writerow(["excluded_no_preference", "", table.excluded, "", "", "", "", "", ""])


def write_counts_csv(out_path: Path, annotations: list[JargonAnnotation]) -> None:
    """The per-unit count table underlying the term-count distributions."""
    rows = count_report(sorted(annotations, key=lambda a: (a.arxiv_id, a.reader_id, a.source)))
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["arxiv_id", "reader_id", "source", "term_count", "mean_words_per_term"])
        for row in rows:
            writer.writerow(
                [row.arxiv_id, row.reader_id, row.source, row.term_count, _fmt(row.mean_words_per_term)]
            )


def count_statistics(annotations: list[JargonAnnotation]) -> dict[str, dict]:
    """Signed-rank test on per-abstract counts and rank-sum test on term lengths.

    Comparisons that lack data (e.g. no human annotations yet) are simply
    omitted rather than failing the counts export.
    """
    out: dict[str, dict] = {}
    try:
        sample = paired_count_sample(annotations)
        wil = wilcoxon_signed_rank(sample)
        out["count_comparison"] = {
            "n": wil.n_effective,
            "statistic": wil.statistic,
            "p_value": wil.p_value,
            "method": wil.method,
        }
    except (PreconditionError, DegenerateSampleError):
        pass
    model_lengths, human_lengths = term_length_samples(annotations)
    if model_lengths and human_lengths:
        mwu = mann_whitney_u(model_lengths, human_lengths)
        out["length_comparison"] = {
            "n": mwu.n_effective,
            "statistic": mwu.statistic,
            "p_value": mwu.p_value,
            "method": mwu.method,
        }
    return out
