"""HTTP API over a pipeline workspace.

Read endpoints serve the file-backed stores; the judgment endpoint is the
server-side counterpart of the interactive capture flow. Generation never
happens here: identify/define run in batch via the CLI.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import __version__
from ..config import AppConfig
from ..errors import StoreError
from ..evaluation import ACCURACY_CHOICES, PREFERENCE_CHOICES, JudgmentRecord
from ..profiles import ProfileStore, ReaderProfile
from ..workspace import Workspace
from . import schemas
from .state import StateStore


def create_app(
    workspace: Workspace,
    config: AppConfig | None = None,
    ui_dist: str | Path | None = None,
) -> FastAPI:
    if not workspace.root.exists():
        raise StoreError(f"workspace {workspace.root} does not exist; run ingest first")
    cfg = config if config is not None else AppConfig()
    state = StateStore(workspace)
    app = FastAPI(title="dejargon", version=__version__)

    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cfg.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        # Schema violations are client errors; report them field by field.
        details = [
            {"field": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": "invalid request", "errors": details})

    def error(status: int, detail: str, hint: dict | None = None) -> JSONResponse:
        body: dict = {"detail": detail}
        if hint:
            body["hint"] = hint
        return JSONResponse(status_code=status, content=body)

    # -- health ---------------------------------------------------------------

    @app.get("/health", response_model=schemas.HealthOut)
    def health():
        return schemas.HealthOut(status="ok", version=__version__)

    # -- articles --------------------------------------------------------------

    @app.get("/articles")
    def list_articles(
        category: str | None = None,
        q: str | None = None,
        page: int = Query(default=1),
        page_size: int = Query(default=20),
    ):
        snap = state.snapshot()
        if page < 1:
            return error(400, f"page must be >= 1, got {page}")
        if not 1 <= page_size <= cfg.page_size_limit:
            return error(400, f"page_size must be in [1, {cfg.page_size_limit}]")
        if category is not None and category not in snap.known_categories:
            return error(400, f"unknown category {category!r}")

        records = list(snap.articles.values())
        if category is not None:
            records = [r for r in records if category in r.all_categories]
        if q:
            needle = q.casefold()
            records = [r for r in records if needle in r.title.casefold() or needle in r.abstract.casefold()]
        records.sort(key=lambda r: (r.updated_at.toordinal() * -1, r.arxiv_id))

        total = len(records)
        start = (page - 1) * page_size
        items = [
            schemas.ArticleSummary(
                arxiv_id=r.arxiv_id,
                title=r.title,
                abstract=r.abstract,
                primary_category=r.primary_category,
                all_categories=r.all_categories,
                updated_at=r.updated_at.isoformat(),
                split=snap.split_labels.get(r.arxiv_id),
                has_fulltext=r.fulltext_status == "extracted",
            )
            for r in records[start : start + page_size]
        ]
        return schemas.ArticlePage(items=items, page=page, page_size=page_size, total=total)

    @app.get("/articles/{arxiv_id}/jargon")
    def article_jargon(
        arxiv_id: str,
        reader: str | None = None,
        method: str | None = None,
    ):
        snap = state.snapshot()
        if arxiv_id not in snap.articles:
            return error(404, f"unknown article {arxiv_id!r}")
        reader_id = reader or cfg.default_reader
        if reader_id not in snap.profiles:
            return error(404, f"unknown reader {reader_id!r}")
        serve_method = method or cfg.serving_method
        if not state.valid_method(serve_method):
            return error(400, f"unknown method {serve_method!r}")
        try:
            terms = state.jargon_for(arxiv_id, reader_id, serve_method)
        except KeyError:
            return error(
                409,
                f"jargon not yet computed for ({arxiv_id}, {reader_id})",
                hint={"run": ["identify", "define"], "reader": reader_id, "arxiv_id": arxiv_id},
            )
        return schemas.JargonOut(
            arxiv_id=arxiv_id,
            reader_id=reader_id,
            abstract=snap.articles[arxiv_id].abstract,
            terms=[schemas.JargonTermOut(**t) for t in terms],
        )

    # -- profiles -----------------------------------------------------------------

    @app.get("/profiles", response_model=list[schemas.ProfileOut])
    def list_profiles():
        snap = state.snapshot()
        return [
            schemas.ProfileOut(**snap.profiles[rid].to_dict()) for rid in sorted(snap.profiles)
        ]

    @app.post("/profiles", response_model=schemas.ProfileOut, status_code=201)
    def add_profile(profile: schemas.ProfileIn):
        store = ProfileStore(workspace)
        if store.exists(profile.reader_id):
            return error(409, f"profile {profile.reader_id!r} already exists")
        record = ReaderProfile(
            reader_id=profile.reader_id,
            description=profile.description,
            expertise_areas=profile.expertise_areas,
            ratings=profile.ratings,
        )
        store.save(record)
        return schemas.ProfileOut(**record.to_dict())

    # -- pairs & judgments ------------------------------------------------------------

    @app.get("/pairs", response_model=schemas.PendingPairsOut)
    def pending_pairs(reader: str | None = None):
        reader_id = reader or cfg.default_reader
        rows = state.pending_pairs(reader_id)
        return schemas.PendingPairsOut(
            reader_id=reader_id,
            pending=[schemas.PendingPair(**row) for row in rows],
        )

    @app.post("/judgments", response_model=schemas.JudgmentOut, status_code=201)
    def post_judgment(judgment: schemas.JudgmentIn):
        if judgment.accuracy_a not in ACCURACY_CHOICES or judgment.accuracy_b not in ACCURACY_CHOICES:
            return error(400, f"accuracy verdicts must be one of {list(ACCURACY_CHOICES)}")
        if judgment.preference is not None and judgment.preference not in PREFERENCE_CHOICES:
            return error(400, f"preference must be one of {list(PREFERENCE_CHOICES)}")
        snap = state.snapshot()
        row = snap.pairs.get(judgment.pair_id)
        if row is None:
            return error(404, f"unknown pair {judgment.pair_id!r}")
        if judgment.preference is not None and (row["slot_a"] is None or row["slot_b"] is None):
            return error(400, "preference requires both definitions to be present")
        record = JudgmentRecord(
            pair_id=judgment.pair_id,
            reader_id=judgment.reader_id,
            accuracy_a=judgment.accuracy_a,
            accuracy_b=judgment.accuracy_b,
            preference=judgment.preference,
            timestamp=_now_iso(),
        )
        try:
            state.record_judgment(record)
        except KeyError:
            return error(404, f"unknown pair {judgment.pair_id!r}")
        except StoreError as exc:
            return error(409, str(exc))
        return schemas.JudgmentOut(pair_id=record.pair_id, reader_id=record.reader_id, recorded=True)

    # -- static UI ---------------------------------------------------------------------

    dist = Path(ui_dist) if ui_dist else None
    if dist and dist.exists():
        app.mount("/ui", StaticFiles(directory=str(dist), html=True), name="ui")

    return app


def _now_iso() -> str:
    from datetime import datetime, timezone

    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
