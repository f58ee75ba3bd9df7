"""Definition generation (abstract-only and RAG) and blinded pair assembly.

For pairwise evaluation, the two candidate definitions are anonymized and
their slot order is a deterministic function of (pair_id, seed), so a
fixed seed reproduces the same presentation while staying balanced across
pairs. The unblinding key is kept apart from the annotator-facing export.
"""

from __future__ import annotations

import dataclasses
import hashlib
import re
from dataclasses import dataclass
from pathlib import Path

from .corpus import ArticleRecord
from .errors import PreconditionError, StoreError
from .llm_gateway import LlmGateway, ModelConfig
from .profiles import render_definition_prompt
from .retrieval import ChunkIndex, retrieve
from .workspace import read_json, write_json

METHOD_ABSTRACT = "abstract_only"
METHOD_RAG = "rag"
STATUS_OK = "ok"
STATUS_NO_CONTEXT = "no_context"
ABSTRACT_CONTEXT_MARKER = "abstract"


@dataclass
class Definition:
    """One generated definition (or a recorded failure to generate one)."""

    arxiv_id: str
    term: str
    method: str
    text: str | None
    context_used: list[str]
    status: str = STATUS_OK

    def __post_init__(self) -> None:
        if self.method not in (METHOD_ABSTRACT, METHOD_RAG):
            raise PreconditionError(f"unknown method {self.method!r}")
        if self.status not in (STATUS_OK, STATUS_NO_CONTEXT):
            raise PreconditionError(f"unknown status {self.status!r}")
        if (self.status == STATUS_OK) != (self.text is not None):
            raise PreconditionError("status=ok exactly when text is present")
        if self.status == STATUS_NO_CONTEXT and self.method != METHOD_RAG:
            raise PreconditionError("no_context is only possible for the rag method")
        if self.method == METHOD_ABSTRACT and self.context_used != [ABSTRACT_CONTEXT_MARKER]:
            raise PreconditionError("abstract_only definitions must cite the abstract as context")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Definition":
        return cls(**d)


def define_abstract_only(
    term: str,
    article: ArticleRecord,
    gateway: LlmGateway,
    config: ModelConfig,
) -> Definition:
    """Generate a definition whose sole context is the article's abstract."""
    bundle = render_definition_prompt(term, article.abstract, mode=METHOD_ABSTRACT, model_config=config)
    text = gateway.complete(bundle, config)
    return Definition(
        arxiv_id=article.arxiv_id,
        term=term,
        method=METHOD_ABSTRACT,
        text=text,
        context_used=[ABSTRACT_CONTEXT_MARKER],
        status=STATUS_OK,
    )


def define_rag(
    term: str,
    article: ArticleRecord,
    index: ChunkIndex,
    gateway: LlmGateway,
    config: ModelConfig,
    threshold: float = 0.3,
    k: int = 5,
    include_abstract: bool = False,
) -> Definition:
    """Generate a definition from fulltext snippets retrieved for the term.

    When no chunk clears the similarity threshold the result is a
    no_context record and no chat completion is issued at all.
    """
    hits = retrieve(term, index, gateway, config, threshold=threshold, k=k)
    if not hits:
        return Definition(
            arxiv_id=article.arxiv_id,
            term=term,
            method=METHOD_RAG,
            text=None,
            context_used=[],
            status=STATUS_NO_CONTEXT,
        )
    snippets = [h.chunk.text for h in hits]
    if include_abstract:
        snippets = [article.abstract] + snippets
    bundle = render_definition_prompt(term, snippets, mode=METHOD_RAG, model_config=config)
    text = gateway.complete(bundle, config)
    return Definition(
        arxiv_id=article.arxiv_id,
        term=term,
        method=METHOD_RAG,
        text=text,
        context_used=[h.chunk.chunk_id for h in hits],
        status=STATUS_OK,
    )


# -- blinded pairs ---------------------------------------------------------------


@dataclass
class DefinitionPair:
    """Two candidate definitions with their methods hidden behind slots."""

    pair_id: str
    arxiv_id: str
    term: str
    slot_a: str
    slot_b: str
    unblind_key: dict[str, str]
    seed: int

    def __post_init__(self) -> None:
        if set(self.unblind_key) != {"slot_a", "slot_b"}:
            raise PreconditionError("unblind_key must map exactly slot_a and slot_b")
        if set(self.unblind_key.values()) != {METHOD_ABSTRACT, METHOD_RAG}:
            raise PreconditionError("unblind_key must cover both methods exactly once")

    def blinded_row(self) -> dict:
        """The annotator-facing serialization; never includes the key."""
        return {
            "pair_id": self.pair_id,
            "arxiv_id": self.arxiv_id,
            "term": self.term,
            "slot_a": self.slot_a,
            "slot_b": self.slot_b,
        }


def default_pair_id(arxiv_id: str, term: str) -> str:
    return hashlib.sha256(f"{arxiv_id}|{term}".encode("utf-8")).hexdigest()[:12]


def abstract_goes_first(pair_id: str, seed: int) -> bool:
    """Deterministic, platform-stable coin flip for slot order."""
    digest = hashlib.sha256(f"{pair_id}|{seed}".encode("utf-8")).digest()
    return digest[0] % 2 == 0


def make_blind_pair(
    d_abs: Definition,
    d_rag: Definition,
    seed: int,
    pair_id: str | None = None,
) -> DefinitionPair:
    """Assemble a blinded, order-randomized pair from two ok definitions."""
    if d_abs.method != METHOD_ABSTRACT or d_rag.method != METHOD_RAG:
        raise PreconditionError("make_blind_pair expects (abstract_only, rag) definitions")
    if d_abs.arxiv_id != d_rag.arxiv_id or d_abs.term != d_rag.term:
        raise PreconditionError(
            f"definitions disagree on unit: ({d_abs.arxiv_id}, {d_abs.term!r}) "
            f"vs ({d_rag.arxiv_id}, {d_rag.term!r})"
        )
    if d_abs.status != STATUS_OK or d_rag.status != STATUS_OK:
        raise PreconditionError("both definitions must have status=ok to form a pair")
    pid = pair_id if pair_id is not None else default_pair_id(d_abs.arxiv_id, d_abs.term)
    if abstract_goes_first(pid, seed):
        slot_a, slot_b = d_abs.text, d_rag.text
        key = {"slot_a": METHOD_ABSTRACT, "slot_b": METHOD_RAG}
    else:
        slot_a, slot_b = d_rag.text, d_abs.text
        key = {"slot_a": METHOD_RAG, "slot_b": METHOD_ABSTRACT}
    return DefinitionPair(
        pair_id=pid,
        arxiv_id=d_abs.arxiv_id,
        term=d_abs.term,
        slot_a=slot_a,
        slot_b=slot_b,
        unblind_key=key,
        seed=seed,
    )


class UnblindKeyStore:
    """pair_id -> slot-to-method mapping, persisted separately from pairs."""

    def __init__(self, keys: dict[str, dict[str, str]], seed: int | None = None):
        self.keys = keys
        self.seed = seed

    def unblind(self, pair_id: str) -> dict[str, str]:
        if pair_id not in self.keys:
            raise StoreError(f"unknown pair_id {pair_id!r}")
        return self.keys[pair_id]

    def __contains__(self, pair_id: str) -> bool:
        return pair_id in self.keys

    @classmethod
    def from_pairs(cls, pairs: list[DefinitionPair], seed: int | None = None) -> "UnblindKeyStore":
        return cls({p.pair_id: dict(p.unblind_key) for p in pairs}, seed=seed)

    def save(self, path: Path) -> None:
        write_json(path, {"seed": self.seed, "keys": self.keys})

    @classmethod
    def load(cls, path: Path) -> "UnblindKeyStore":
        if not Path(path).exists():
            raise StoreError(f"no unblind key file at {path}")
        payload = read_json(Path(path))
        return cls(payload["keys"], seed=payload.get("seed"))


@dataclass(frozen=True)
class PairAssembly:
    """Everything `pairs` production emits in one pass."""

    blinded_rows: tuple[dict, ...]
    key_store: UnblindKeyStore
    paired: int  # both definitions ok
    accuracy_only: int  # rag came back no_context; still judged for accuracy
    skipped: int  # units missing one method entirely


def assemble_pairs(definitions: list[Definition], seed: int) -> PairAssembly:
    """Group definitions by (article, term) and build the blinded export.

    Units where RAG produced no context are not comparable pairwise; they
    are exported with the available definition in a randomized slot and
    the other slot empty, so accuracy accounting still sees them.
    """
    by_unit: dict[tuple[str, str], dict[str, Definition]] = {}
    for d in definitions:
        by_unit.setdefault((d.arxiv_id, d.term), {})[d.method] = d

    rows: list[dict] = []
    keys: dict[str, dict[str, str]] = {}
    paired = accuracy_only = skipped = 0
    for arxiv_id, term in sorted(by_unit):
        unit = by_unit[(arxiv_id, term)]
        d_abs = unit.get(METHOD_ABSTRACT)
        d_rag = unit.get(METHOD_RAG)
        if d_abs is None or d_rag is None or d_abs.status != STATUS_OK:
            skipped += 1
            continue
        pid = default_pair_id(arxiv_id, term)
        if d_rag.status == STATUS_OK:
            pair = make_blind_pair(d_abs, d_rag, seed, pair_id=pid)
            rows.append(pair.blinded_row())
            keys[pid] = dict(pair.unblind_key)
            paired += 1
        else:
            if abstract_goes_first(pid, seed):
                slot_a, slot_b = d_abs.text, None
                key = {"slot_a": METHOD_ABSTRACT, "slot_b": METHOD_RAG}
            else:
                slot_a, slot_b = None, d_abs.text
                key = {"slot_a": METHOD_RAG, "slot_b": METHOD_ABSTRACT}
            rows.append(
                {"pair_id": pid, "arxiv_id": arxiv_id, "term": term, "slot_a": slot_a, "slot_b": slot_b}
            )
            keys[pid] = key
            accuracy_only += 1
    return PairAssembly(
        blinded_rows=tuple(rows),
        key_store=UnblindKeyStore(keys, seed=seed),
        paired=paired,
        accuracy_only=accuracy_only,
        skipped=skipped,
    )


# Strings whose presence in an annotator-facing export would identify a
# method: the method names themselves plus bookkeeping markers.
_LEAK_PATTERNS = [
    re.compile(r"\babstract[_-]only\b", re.IGNORECASE),
    re.compile(r"\brag\b", re.IGNORECASE),
    re.compile(r"\bretrieval[_-]augmented\b", re.IGNORECASE),
    re.compile(r"\bcontext_used\b", re.IGNORECASE),
    re.compile(r"\bno_context\b", re.IGNORECASE),
    re.compile(r"\bunblind\b", re.IGNORECASE),
    re.compile(r"\bmethod\b", re.IGNORECASE),
]


def audit_blinding(serialized: str) -> list[str]:
    """Return the method-identifying markers found in an export, if any."""
    return [pat.pattern for pat in _LEAK_PATTERNS if pat.search(serialized)]
