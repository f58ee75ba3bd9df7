"""Jargon identification, grounding, and scoring against human annotations.

Model replies are parsed into terms, grounded to character spans in the
abstract (first occurrence wins), and compared to gold annotations with
precision, recall, and F2 (beta=2, weighting recall four times as heavily
as precision in the denominator).
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field

from .corpus import ArticleRecord
from .errors import PreconditionError, ReplyParseError
from .llm_gateway import LlmGateway, ModelConfig
from .profiles import DEFAULT_NO_JARGON_SENTINEL, ReaderProfile, render_identification_prompt

SOURCE_HUMAN = "human"
SOURCE_MODEL = "model"

_WS_RE = re.compile(r"\s+")
_BULLET_RE = re.compile(r"^\s*(?:[-*•‣◦]|\d+[.)\]]|\(\d+\))\s*")
# Punctuation stripped from term edges; internal characters are preserved.
_EDGE_PUNCT = "\"'“”‘’`´.,:;!?()[]{}<>«»…-–—/\\|+*^~@#$%&_="


def normalize_term(term: str) -> str:
    """Case-fold, collapse whitespace, and strip surrounding punctuation."""
    t = _WS_RE.sub(" ", term.casefold()).strip()
    return t.strip(_EDGE_PUNCT + " ")


def parse_term_reply(reply: str, sentinel: str = DEFAULT_NO_JARGON_SENTINEL) -> list[str]:
    """Parse a newline-separated term reply; the sentinel means "no jargon".

    Tolerates bullets/numbering. Terms are deduplicated under
    normalization, keeping the first surface form. A blank reply is a parse
    error (distinct from an explicit empty list) and carries the raw text.
    """
    if not reply or not reply.strip():
        raise ReplyParseError("model reply is empty", raw_reply=reply)
    lines = [_BULLET_RE.sub("", ln).strip() for ln in reply.splitlines()]
    lines = [ln for ln in lines if ln]
    non_sentinel = [ln for ln in lines if ln.casefold() != sentinel.casefold()]
    if not non_sentinel:
        return []
    terms: list[str] = []
    seen: set[str] = set()
    for line in non_sentinel:
        key = normalize_term(line)
        if key and key not in seen:
            seen.add(key)
            terms.append(line)
    if not terms:
        raise ReplyParseError("no usable terms in model reply", raw_reply=reply)
    return terms


def _normalized_with_offsets(text: str) -> tuple[str, list[int]]:
    """Case-fold and collapse whitespace, keeping a map back to original offsets."""
    chars: list[str] = []
    offsets: list[int] = []
    for i, ch in enumerate(text):
        if ch.isspace():
            if chars and chars[-1] != " ":
                chars.append(" ")
                offsets.append(i)
            continue
        for folded in ch.casefold():
            chars.append(folded)
            offsets.append(i)
    if chars and chars[-1] == " ":
        chars.pop()
        offsets.pop()
    return "".join(chars), offsets


def ground_terms(abstract: str, terms: list[str]) -> tuple[list[str], list[tuple[int, int]], list[str]]:
    """Map each term to its first occurrence in the abstract.

    Matching is done in normalized space with word boundaries on both
    sides, then translated back to character offsets into the original
    abstract. Returns (grounded_terms, spans, unmatched_terms).
    """
    norm_text, offsets = _normalized_with_offsets(abstract)
    grounded: list[str] = []
    spans: list[tuple[int, int]] = []
    unmatched: list[str] = []
    for term in terms:
        key = normalize_term(term)
        if not key:
            unmatched.append(term)
            continue
        span = _find_span(norm_text, offsets, key)
        if span is None:
            unmatched.append(term)
        else:
            grounded.append(term)
            spans.append(span)
    return grounded, spans, unmatched


def _find_span(norm_text: str, offsets: list[int], key: str) -> tuple[int, int] | None:
    pos = 0
    while True:
        i = norm_text.find(key, pos)
        if i < 0:
            return None
        end = i + len(key)
        left_ok = i == 0 or not norm_text[i - 1].isalnum()
        right_ok = end == len(norm_text) or not norm_text[end].isalnum()
        if left_ok and right_ok:
            return offsets[i], offsets[end - 1] + 1
        pos = i + 1


@dataclass
class JargonAnnotation:
    """Jargon terms for one (article, reader, source) triple.

    ``terms`` and ``spans`` are parallel; ``unmatched`` holds terms that
    could not be grounded in the abstract.
    """

    arxiv_id: str
    reader_id: str
    source: str
    terms: list[str] = field(default_factory=list)
    spans: list[tuple[int, int]] = field(default_factory=list)
    unmatched: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.source not in (SOURCE_HUMAN, SOURCE_MODEL):
            raise PreconditionError(f"source must be human|model, got {self.source!r}")
        if len(self.terms) != len(self.spans):
            raise PreconditionError("terms and spans must be parallel lists")
        keys = [normalize_term(t) for t in self.terms]
        if len(keys) != len(set(keys)):
            raise PreconditionError("terms must be deduplicated under normalization")
        overlap = set(keys) & {normalize_term(t) for t in self.unmatched}
        if overlap:
            raise PreconditionError(f"terms cannot be both grounded and unmatched: {sorted(overlap)}")

    def normalized_terms(self) -> set[str]:
        return {normalize_term(t) for t in self.terms}

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["spans"] = [list(s) for s in self.spans]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "JargonAnnotation":
        d = dict(d)
        d["spans"] = [tuple(s) for s in d.get("spans", [])]
        return cls(**d)


def identify_jargon(
    profile: ReaderProfile,
    article: ArticleRecord,
    gateway: LlmGateway,
    model_config: ModelConfig | None = None,
    sentinel: str = DEFAULT_NO_JARGON_SENTINEL,
    include_ratings: bool = False,
) -> JargonAnnotation:
    """Ask the model for personalized jargon terms and ground them.

    An empty term list is a legal result. Terms the model invents that do
    not occur in the abstract are kept in ``unmatched`` for audit.
    """
    if not article.abstract.strip():
        raise PreconditionError(f"article {article.arxiv_id} has an empty abstract")
    bundle = render_identification_prompt(
        profile,
        article.abstract,
        model_config=model_config,
        include_ratings=include_ratings,
        sentinel=sentinel,
    )
    reply = gateway.complete(bundle, model_config)
    terms = parse_term_reply(reply, sentinel=sentinel)
    grounded, spans, unmatched = ground_terms(article.abstract, terms)
    return JargonAnnotation(
        arxiv_id=article.arxiv_id,
        reader_id=profile.reader_id,
        source=SOURCE_MODEL,
        terms=grounded,
        spans=spans,
        unmatched=unmatched,
    )


# -- scoring -----------------------------------------------------------------


@dataclass(frozen=True)
class ScoreReport:
    """Precision / recall / F2 over matched term sets.

    Metrics are None when their denominator is empty; F2 is 0 when both
    precision and recall are 0 and None when either is undefined.
    """

    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float | None:
        return self.tp / (self.tp + self.fp) if (self.tp + self.fp) > 0 else None

    @property
    def recall(self) -> float | None:
        return self.tp / (self.tp + self.fn) if (self.tp + self.fn) > 0 else None

    @property
    def f2(self) -> float | None:
        p, r = self.precision, self.recall
        if p is None or r is None:
            return None
        denom = 4 * p + r
        if denom == 0:
            return 0.0
        return 5 * p * r / denom


def _is_token_sublist(needle: list[str], haystack: list[str]) -> bool:
    if not needle or len(needle) > len(haystack):
        return False
    return any(haystack[i : i + len(needle)] == needle for i in range(len(haystack) - len(needle) + 1))


def terms_match(a: str, b: str, policy: str = "exact") -> bool:
    """Decide whether two normalized terms count as the same annotation.

    exact: string equality. subsumption: additionally, one term's token
    sequence occurring as a contiguous run inside the other's.
    """
    if policy == "exact":
        return a == b
    if policy == "subsumption":
        if a == b:
            return True
        ta, tb = a.split(), b.split()
        return _is_token_sublist(ta, tb) or _is_token_sublist(tb, ta)
    raise PreconditionError(f"unknown match policy {policy!r}")


def _max_bipartite_matching(pred: list[str], gold: list[str], policy: str) -> int:
    """Maximum one-to-one matching size between predicted and gold terms."""
    match_of_gold: dict[int, int] = {}

    def try_assign(p: int, visited: set[int]) -> bool:
        for g in range(len(gold)):
            if g in visited or not terms_match(pred[p], gold[g], policy):
                continue
            visited.add(g)
            if g not in match_of_gold or try_assign(match_of_gold[g], visited):
                match_of_gold[g] = p
                return True
        return False

    size = 0
    for p in range(len(pred)):
        if try_assign(p, set()):
            size += 1
    return size


def score(
    predicted: JargonAnnotation,
    gold: JargonAnnotation,
    policy: str = "exact",
) -> ScoreReport:
    """Score a model annotation against a human one for the same unit."""
    if predicted.arxiv_id != gold.arxiv_id or predicted.reader_id != gold.reader_id:
        raise PreconditionError(
            f"annotation mismatch: predicted ({predicted.arxiv_id}, {predicted.reader_id}) "
            f"vs gold ({gold.arxiv_id}, {gold.reader_id})"
        )
    if predicted.source != SOURCE_MODEL or gold.source != SOURCE_HUMAN:
        raise PreconditionError("score expects predicted.source=model and gold.source=human")
    pred_terms = sorted(predicted.normalized_terms())
    gold_terms = sorted(gold.normalized_terms())
    tp = _max_bipartite_matching(pred_terms, gold_terms, policy)
    return ScoreReport(tp=tp, fp=len(pred_terms) - tp, fn=len(gold_terms) - tp)


# -- count reporting -----------------------------------------------------------


@dataclass(frozen=True)
class CountRow:
    """Per-annotation term count and mean words per term."""

    arxiv_id: str
    reader_id: str
    source: str
    term_count: int
    mean_words_per_term: float | None


def term_word_length(term: str) -> int:
    """Number of whitespace-separated words; hyphenated tokens count once."""
    return len(term.split())


def count_report(annotations: list[JargonAnnotation]) -> list[CountRow]:
    """Flatten annotations into the per-unit counts behind the distribution plots."""
    rows = []
    for ann in annotations:
        all_terms = ann.terms + ann.unmatched
        lengths = [term_word_length(t) for t in all_terms]
        rows.append(
            CountRow(
                arxiv_id=ann.arxiv_id,
                reader_id=ann.reader_id,
                source=ann.source,
                term_count=len(all_terms),
                mean_words_per_term=(sum(lengths) / len(lengths)) if lengths else None,
            )
        )
    return rows
