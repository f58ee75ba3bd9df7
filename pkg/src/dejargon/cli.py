"""Command-line entry points; thin wrappers over the pipeline and server."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import __version__, pipeline
from .arxiv_client import DirectoryFeedTransport, LiveFeedTransport
from .config import AppConfig
from .corpus import CorpusStore, attach_fulltext
from .definitions import METHOD_ABSTRACT, METHOD_RAG, UnblindKeyStore
from .errors import DejargonError
from .evaluation import capture_judgments, load_judgments
from .llm_gateway import LiveTransport, LlmGateway
from .profiles import ProfileStore, ReaderProfile
from .workspace import Workspace, read_jsonl


@click.group()
@click.version_option(__version__)
@click.option("--store", "store_path", default="./store", show_default=True, help="Workspace directory.")
@click.option("--config", "config_path", default=None, help="JSON config file (defaults to <store>/config.json).")
@click.pass_context
def main(ctx: click.Context, store_path: str, config_path: str | None):
    """Personalized jargon identification and definitions for arXiv abstracts."""
    workspace = Workspace(store_path)
    cfg_file = Path(config_path) if config_path else workspace.config_path
    ctx.obj = {"workspace": workspace, "config": AppConfig.load(cfg_file)}


def _gateway(ctx_obj: dict, mode: str | None = None) -> LlmGateway:
    cfg: AppConfig = ctx_obj["config"]
    workspace: Workspace = ctx_obj["workspace"]
    gw_mode = mode or cfg.llm_mode
    transport = None
    if gw_mode in ("live", "record"):
        transport = LiveTransport(cfg.api_base, api_key=cfg.api_key)
    return LlmGateway(
        mode=gw_mode,
        fixtures_dir=workspace.llm_fixtures_dir,
        transport=transport,
        max_in_flight=cfg.max_in_flight,
    )


def _fail(exc: Exception) -> None:
    raise click.ClickException(str(exc))


# -- corpus ------------------------------------------------------------------


@main.command()
@click.option("--categories", required=True, help="Comma-separated arXiv categories, e.g. cs.AI,cs.HC,cs.CY.")
@click.option("--from", "date_from", required=True, type=click.DateTime(["%Y-%m-%d"]))
@click.option("--to", "date_to", required=True, type=click.DateTime(["%Y-%m-%d"]))
@click.option("--feed-dir", default=None, help="Replay feed pages from XML files instead of the live API.")
@click.option("--all-preprints", is_flag=True, help="Skip the peer-reviewed comments filter.")
@click.pass_obj
def ingest(obj, categories: str, date_from, date_to, feed_dir: str | None, all_preprints: bool):
    """Harvest listings for the given categories and date window."""
    workspace: Workspace = obj["workspace"]
    workspace.ensure_layout()
    cfg: AppConfig = obj["config"]
    transport = (
        DirectoryFeedTransport(feed_dir)
        if feed_dir
        else LiveFeedTransport(min_delay_s=cfg.request_delay_s)
    )
    window = (date_from.date(), date_to.date())
    try:
        counts = pipeline.run_ingest(
            workspace,
            cfg,
            [c.strip() for c in categories.split(",") if c.strip()],
            window,
            transport,
            peer_reviewed_only=not all_preprints,
        )
    except DejargonError as exc:
        _fail(exc)
    for category, n in counts.items():
        click.echo(f"{category}: {n} kept")


@main.command()
@click.option("--fraction", required=True, type=float)
@click.option("--seed", required=True, type=int)
@click.pass_obj
def sample(obj, fraction: float, seed: int):
    """Stratified-sample the stored corpus into test/dev splits."""
    try:
        n_test, n_dev = pipeline.run_sample(obj["workspace"], fraction, seed)
    except DejargonError as exc:
        _fail(exc)
    click.echo(f"test: {n_test} articles, dev: {n_dev} articles")


@main.command()
@click.option("--arxiv-id", required=True)
@click.option("--source", "source_path", required=True, type=click.Path(exists=True))
@click.option("--converter", default=None, help="Converter command with {src}/{dst} placeholders.")
@click.pass_obj
def fulltext(obj, arxiv_id: str, source_path: str, converter: str | None):
    """Attach fulltext to a stored article from a local file."""
    store = CorpusStore(obj["workspace"])
    try:
        record = attach_fulltext(store.load(arxiv_id), source_path, converter=converter)
        store.save(record)
    except DejargonError as exc:
        _fail(exc)
    click.echo(f"{arxiv_id}: fulltext_status={record.fulltext_status}")


# -- profiles ------------------------------------------------------------------


@main.group()
def profiles():
    """Manage reader profiles."""


@profiles.command("add")
@click.option("--id", "reader_id", required=True)
@click.option("--description", required=True)
@click.option("--area", "areas", multiple=True, help="Expertise area (repeatable).")
@click.option("--rating", "ratings", multiple=True, help="topic=1..5 (repeatable).")
@click.pass_obj
def profiles_add(obj, reader_id: str, description: str, areas: tuple[str, ...], ratings: tuple[str, ...]):
    parsed_ratings = {}
    for item in ratings:
        topic, _, value = item.partition("=")
        parsed_ratings[topic] = int(value)
    try:
        profile = ReaderProfile(
            reader_id=reader_id,
            description=description,
            expertise_areas=list(areas),
            ratings=parsed_ratings or None,
        )
    except DejargonError as exc:
        _fail(exc)
    obj["workspace"].ensure_layout()
    ProfileStore(obj["workspace"]).save(profile)
    click.echo(f"saved profile {reader_id}")


@profiles.command("list")
@click.pass_obj
def profiles_list(obj):
    for profile in ProfileStore(obj["workspace"]).load_all():
        click.echo(f"{profile.reader_id}: {profile.description[:70]}")


# -- generation -----------------------------------------------------------------


@main.command()
@click.option("--reader", "reader_id", required=True)
@click.option("--split", default="test", show_default=True)
@click.option("--llm-mode", default=None, type=click.Choice(["replay", "record", "live"]))
@click.pass_obj
def identify(obj, reader_id: str, split: str, llm_mode: str | None):
    """Identify personalized jargon for every article in a split."""
    try:
        out = pipeline.run_identify(obj["workspace"], _gateway(obj, llm_mode), obj["config"], reader_id, split)
    except DejargonError as exc:
        _fail(exc)
    click.echo(f"annotations written to {out}")


@main.command()
@click.option("--arxiv-id", "arxiv_ids", multiple=True, help="Restrict to specific articles (repeatable).")
@click.option("--llm-mode", default=None, type=click.Choice(["replay", "record", "live"]))
@click.pass_obj
def index(obj, arxiv_ids: tuple[str, ...], llm_mode: str | None):
    """Chunk and embed fulltext for retrieval."""
    try:
        done = pipeline.run_index(
            obj["workspace"], _gateway(obj, llm_mode), obj["config"], list(arxiv_ids) or None
        )
    except DejargonError as exc:
        _fail(exc)
    click.echo(f"indexed {len(done)} article(s)")


@main.command()
@click.option("--reader", "reader_ids", multiple=True, required=True, help="Reader(s) whose terms to define.")
@click.option("--method", default="both", type=click.Choice(["both", METHOD_ABSTRACT, METHOD_RAG]), show_default=True)
@click.option("--source", default="model", type=click.Choice(["model", "human"]), show_default=True)
@click.option("--threshold", default=None, type=float, help="Override the retrieval cosine threshold.")
@click.option("--llm-mode", default=None, type=click.Choice(["replay", "record", "live"]))
@click.pass_obj
def define(obj, reader_ids: tuple[str, ...], method: str, source: str, threshold: float | None, llm_mode: str | None):
    """Generate definitions for annotated terms."""
    cfg: AppConfig = obj["config"]
    if threshold is not None:
        cfg.retrieval_threshold = threshold
    methods = (METHOD_ABSTRACT, METHOD_RAG) if method == "both" else (method,)
    try:
        out = pipeline.run_define(
            obj["workspace"], _gateway(obj, llm_mode), cfg, list(reader_ids), source=source, methods=methods
        )
    except DejargonError as exc:
        _fail(exc)
    click.echo(f"definitions written to {out}")


@main.command()
@click.option("--seed", required=True, type=int)
@click.pass_obj
def pairs(obj, seed: int):
    """Assemble the blinded pair export and its separate key file."""
    workspace: Workspace = obj["workspace"]
    try:
        assembly = pipeline.run_pairs(workspace, seed)
    except DejargonError as exc:
        _fail(exc)
    click.echo(
        f"pairs: {assembly.paired} blinded, {assembly.accuracy_only} accuracy-only, "
        f"{assembly.skipped} skipped -> {workspace.pairs_path}"
    )
    click.echo(f"unblinding key -> {workspace.pairs_key_path}")


# -- judging & scoring ----------------------------------------------------------------


@main.command()
@click.option("--pairs", "pairs_path", default=None, type=click.Path(), help="Blinded pairs file (default: workspace export).")
@click.option("--reader", "reader_id", required=True)
@click.pass_obj
def annotate(obj, pairs_path: str | None, reader_id: str):
    """Interactively judge pending blinded pairs."""
    workspace: Workspace = obj["workspace"]
    path = Path(pairs_path) if pairs_path else workspace.pairs_path
    if not path.exists():
        _fail(FileNotFoundError(f"no pairs file at {path}"))
    rows = list(read_jsonl(path))
    abstracts = {r.arxiv_id: r.abstract for r in CorpusStore(workspace).load_all()}
    try:
        capture_judgments(
            rows, reader_id, workspace.judgments_path, sys.stdin, sys.stdout, abstracts=abstracts
        )
    except DejargonError as exc:
        _fail(exc)


@main.command()
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--policy", default="exact", type=click.Choice(["exact", "subsumption"]), show_default=True)
@click.option("--out", "out_path", default="scores.csv", show_default=True)
@click.pass_obj
def score(obj, pred_path: str, gold_path: str, policy: str, out_path: str):
    """Score predicted annotations against gold ones (per-article P/R/F2 + medians)."""
    pred = pipeline.load_annotations(Path(pred_path))
    gold = pipeline.load_annotations(Path(gold_path))
    try:
        medians = pipeline.write_score_csv(Path(out_path), pred, gold, policy=policy)
    except DejargonError as exc:
        _fail(exc)
    parts = ", ".join(f"median {k}={v:.4f}" for k, v in medians.items() if v is not None)
    click.echo(f"{out_path}: {parts}")


@main.command()
@click.argument("table", type=click.Choice(["accuracy", "quality", "counts"]))
@click.option("--judgments", "judgments_path", default=None, type=click.Path())
@click.option("--key", "key_path", default=None, type=click.Path())
@click.option("--annotations", "annotation_paths", multiple=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True)
@click.pass_obj
def evaluate(obj, table: str, judgments_path, key_path, annotation_paths, out_path):
    """Emit evaluation tables as CSV."""
    workspace: Workspace = obj["workspace"]
    out = Path(out_path)
    try:
        if table in ("accuracy", "quality"):
            judgments = load_judgments(Path(judgments_path) if judgments_path else workspace.judgments_path)
            keys = UnblindKeyStore.load(Path(key_path) if key_path else workspace.pairs_key_path)
            if table == "accuracy":
                pipeline.write_accuracy_csv(out, judgments, keys)
            else:
                pipeline.write_quality_csv(out, judgments, keys)
        else:
            paths = [Path(p) for p in annotation_paths]
            if not paths:
                paths = sorted(workspace.annotations_dir.glob("*.jsonl"))
            annotations = [a for p in paths for a in pipeline.load_annotations(p)]
            pipeline.write_counts_csv(out, annotations)
            stats = pipeline.count_statistics(annotations) if annotations else {}
            for name, result in stats.items():
                click.echo(f"{name}: statistic={result['statistic']:.4f} p={result['p_value']:.6f} ({result['method']}, n={result['n']})")
    except DejargonError as exc:
        _fail(exc)
    click.echo(f"wrote {out}")


# -- server ------------------------------------------------------------------------


@main.command()
@click.option("--bind", default="127.0.0.1:8807", show_default=True)
@click.option("--store", "store_path", default=None, type=click.Path(), help="Workspace override.")
@click.option("--ui-dist", default=None, type=click.Path(), help="Static frontend bundle to mount at /ui.")
@click.pass_obj
def serve(obj, bind: str, store_path: str | None, ui_dist: str | None):
    """Run the HTTP API server."""
    import uvicorn

    from .server import create_app

    workspace = Workspace(store_path) if store_path else obj["workspace"]
    host, _, port = bind.partition(":")
    app = create_app(workspace, obj["config"], ui_dist=ui_dist)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8807))


if __name__ == "__main__":
    main()
