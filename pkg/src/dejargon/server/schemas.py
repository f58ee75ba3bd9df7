"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthOut(BaseModel):
    status: str
    version: str


class ArticleSummary(BaseModel):
    arxiv_id: str
    title: str
    abstract: str
    primary_category: str
    all_categories: list[str]
    updated_at: str
    split: str | None = None
    has_fulltext: bool


class ArticlePage(BaseModel):
    items: list[ArticleSummary]
    page: int
    page_size: int
    total: int


class Span(BaseModel):
    start: int
    end: int


class JargonTermOut(BaseModel):
    term: str
    span: Span
    definition: str | None
    method: str
    status: str  # ok | no_context | missing


class JargonOut(BaseModel):
    arxiv_id: str
    reader_id: str
    abstract: str
    terms: list[JargonTermOut]


class ProfileIn(BaseModel):
    reader_id: str = Field(min_length=1)
    description: str = Field(min_length=1)
    expertise_areas: list[str] = []
    ratings: dict[str, int] | None = None


class ProfileOut(BaseModel):
    reader_id: str
    description: str
    expertise_areas: list[str]
    ratings: dict[str, int] | None


class PendingPair(BaseModel):
    pair_id: str
    arxiv_id: str
    term: str
    slot_a: str | None
    slot_b: str | None


class PendingPairsOut(BaseModel):
    reader_id: str
    pending: list[PendingPair]


class JudgmentIn(BaseModel):
    pair_id: str = Field(min_length=1)
    reader_id: str = Field(min_length=1)
    accuracy_a: str
    accuracy_b: str
    preference: str | None = None


class JudgmentOut(BaseModel):
    pair_id: str
    reader_id: str
    recorded: bool


class ErrorOut(BaseModel):
    detail: str
    hint: dict | None = None
