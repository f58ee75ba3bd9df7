"""Judgment recording and the summary tables built from it.

Accuracy is tallied per method with no-context cases counted as missing
in the denominator; pairwise quality is tallied as win/loss/tie per
method, per reader and overall. Judgment capture is an append-only,
resumable terminal flow.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, TextIO

from .definitions import METHOD_ABSTRACT, METHOD_RAG, UnblindKeyStore
from .errors import PreconditionError, StoreError
from .jargon_id import SOURCE_HUMAN, SOURCE_MODEL, JargonAnnotation, term_word_length
from .stats import PairedSample
from .workspace import append_jsonl, read_jsonl

ACCURACY_CHOICES = ("correct", "incorrect", "not_applicable")
PREFERENCE_CHOICES = ("slot_a", "slot_b", "tie")


@dataclass
class JudgmentRecord:
    """One annotator's verdicts for one blinded pair."""

    pair_id: str
    reader_id: str
    accuracy_a: str
    accuracy_b: str
    preference: str | None
    timestamp: str

    def __post_init__(self) -> None:
        for label, value in (("accuracy_a", self.accuracy_a), ("accuracy_b", self.accuracy_b)):
            if value not in ACCURACY_CHOICES:
                raise PreconditionError(f"{label} must be one of {ACCURACY_CHOICES}, got {value!r}")
        if self.preference is not None and self.preference not in PREFERENCE_CHOICES:
            raise PreconditionError(f"preference must be one of {PREFERENCE_CHOICES}, got {self.preference!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "JudgmentRecord":
        return cls(**d)


def load_judgments(path: Path) -> list[JudgmentRecord]:
    return [JudgmentRecord.from_dict(row) for row in read_jsonl(path)]


def append_judgments(path: Path, records: list[JudgmentRecord]) -> int:
    seen = {(r.pair_id, r.reader_id) for r in load_judgments(path)}
    fresh = []
    for rec in records:
        key = (rec.pair_id, rec.reader_id)
        if key in seen:
            raise PreconditionError(f"duplicate judgment for pair {rec.pair_id} by {rec.reader_id}")
        seen.add(key)
        fresh.append(rec.to_dict())
    return append_jsonl(path, fresh)


# -- accuracy ------------------------------------------------------------------


@dataclass(frozen=True)
class AccuracySummary:
    method: str
    n: int
    correct: int
    incorrect: int
    missing: int

    @property
    def correct_pct(self) -> float:
        return 100.0 * self.correct / self.n

    @property
    def incorrect_pct(self) -> float:
        return 100.0 * self.incorrect / self.n

    @property
    def missing_pct(self) -> float:
        return 100.0 * self.missing / self.n


def accuracy_summary(
    judgments: list[JudgmentRecord],
    key_store: UnblindKeyStore,
) -> dict[str, AccuracySummary]:
    """Per-method accuracy with no-context cases kept in the denominator.

    Every judgment contributes one verdict per method (via unblinding);
    ``not_applicable`` verdicts count as missing, so percentages per
    method sum to 100.
    """
    if not judgments:
        raise PreconditionError("no judgments to summarize")
    tallies = {m: {"correct": 0, "incorrect": 0, "not_applicable": 0} for m in (METHOD_ABSTRACT, METHOD_RAG)}
    for rec in judgments:
        key = key_store.unblind(rec.pair_id)
        tallies[key["slot_a"]][rec.accuracy_a] += 1
        tallies[key["slot_b"]][rec.accuracy_b] += 1
    out = {}
    for m, counts in tallies.items():
        n = sum(counts.values())
        if n == 0:
            continue
        out[m] = AccuracySummary(
            method=m,
            n=n,
            correct=counts["correct"],
            incorrect=counts["incorrect"],
            missing=counts["not_applicable"],
        )
    return out


# -- pairwise quality ------------------------------------------------------------


@dataclass(frozen=True)
class WinLossTie:
    scope: str  # reader_id or "overall"
    method: str
    n: int
    wins: int
    losses: int
    ties: int

    @property
    def win_pct(self) -> float:
        return 100.0 * self.wins / self.n

    @property
    def loss_pct(self) -> float:
        return 100.0 * self.losses / self.n

    @property
    def tie_pct(self) -> float:
        return 100.0 * self.ties / self.n


@dataclass(frozen=True)
class QualityTable:
    rows: tuple[WinLossTie, ...]
    excluded: int  # judgments without a preference (accuracy-only pairs)


def win_loss_tie(
    judgments: list[JudgmentRecord],
    key_store: UnblindKeyStore,
) -> QualityTable:
    """Win/loss/tie percentages per method, per reader and overall.

    Over one judgment set the table is complementary by construction:
    win%(abstract) = loss%(rag) and tie percentages match.
    """
    if not judgments:
        raise PreconditionError("no judgments to tabulate")
    with_pref = [r for r in judgments if r.preference is not None]
    excluded = len(judgments) - len(with_pref)

    scopes: dict[str, list[JudgmentRecord]] = {}
    for rec in with_pref:
        scopes.setdefault(rec.reader_id, []).append(rec)
    if with_pref:
        scopes["overall"] = list(with_pref)

    rows: list[WinLossTie] = []
    for scope in sorted(scopes):
        recs = scopes[scope]
        counts = {m: {"win": 0, "loss": 0, "tie": 0} for m in (METHOD_ABSTRACT, METHOD_RAG)}
        for rec in recs:
            key = key_store.unblind(rec.pair_id)
            if rec.preference == "tie":
                counts[METHOD_ABSTRACT]["tie"] += 1
                counts[METHOD_RAG]["tie"] += 1
            else:
                winner = key[rec.preference]
                loser = METHOD_RAG if winner == METHOD_ABSTRACT else METHOD_ABSTRACT
                counts[winner]["win"] += 1
                counts[loser]["loss"] += 1
        for m in (METHOD_ABSTRACT, METHOD_RAG):
            rows.append(
                WinLossTie(
                    scope=scope,
                    method=m,
                    n=len(recs),
                    wins=counts[m]["win"],
                    losses=counts[m]["loss"],
                    ties=counts[m]["tie"],
                )
            )
    return QualityTable(rows=tuple(rows), excluded=excluded)


# -- count and length comparisons ---------------------------------------------------


def paired_count_sample(
    annotations: list[JargonAnnotation],
    reader_id: str | None = None,
) -> PairedSample:
    """Per-abstract (model_count, human_count) pairs for the signed-rank test.

    Only units annotated by both sources are paired; optionally restricted
    to one reader.
    """
    counts: dict[tuple[str, str], dict[str, int]] = {}
    for ann in annotations:
        if reader_id is not None and ann.reader_id != reader_id:
            continue
        unit = counts.setdefault((ann.arxiv_id, ann.reader_id), {})
        unit[ann.source] = len(ann.terms) + len(ann.unmatched)
    pairs = [
        (float(unit[SOURCE_MODEL]), float(unit[SOURCE_HUMAN]))
        for _, unit in sorted(counts.items())
        if SOURCE_MODEL in unit and SOURCE_HUMAN in unit
    ]
    if not pairs:
        raise PreconditionError("no units annotated by both sources")
    return PairedSample.of(pairs)


def term_length_samples(
    annotations: list[JargonAnnotation],
    reader_id: str | None = None,
) -> tuple[list[float], list[float]]:
    """(model, human) per-term word lengths for the rank-sum comparison."""
    model: list[float] = []
    human: list[float] = []
    for ann in annotations:
        if reader_id is not None and ann.reader_id != reader_id:
            continue
        bucket = model if ann.source == SOURCE_MODEL else human
        bucket.extend(float(term_word_length(t)) for t in ann.terms + ann.unmatched)
    return model, human


# -- interactive capture -----------------------------------------------------------


def _utc_now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _ask(
    prompt: str,
    choices: dict[str, str],
    input_fh: TextIO,
    output_fh: TextIO,
) -> str:
    """Prompt until the reply maps to a valid choice; EOF aborts."""
    options = "/".join(sorted(set(choices.values()), key=list(choices.values()).index))
    while True:
        output_fh.write(f"{prompt} [{options}]: ")
        output_fh.flush()
        line = input_fh.readline()
        if not line:
            raise StoreError("input stream closed mid-judgment")
        reply = line.strip().lower()
        if reply in choices:
            return choices[reply]
        output_fh.write(f"  unrecognized input {reply!r}; try again\n")


def capture_judgments(
    pairs: list[dict],
    reader_id: str,
    judgments_path: Path,
    input_fh: TextIO,
    output_fh: TextIO,
    abstracts: dict[str, str] | None = None,
    now: Callable[[], str] = _utc_now_iso,
) -> list[JudgmentRecord]:
    """Walk the annotator through every pending pair.

    Pairs already judged by this reader are skipped, so an interrupted
    session resumes where it left off. Records are appended, never
    rewritten.
    """
    for i, row in enumerate(pairs):
        for field in ("pair_id", "term", "slot_a", "slot_b"):
            if field not in row:
                raise StoreError(f"pairs row {i} is missing field {field!r}")

    done = {(r.pair_id, r.reader_id) for r in load_judgments(judgments_path)}
    pending = [row for row in pairs if (row["pair_id"], reader_id) not in done]
    output_fh.write(f"{len(pending)} of {len(pairs)} pairs pending for {reader_id}\n")

    accuracy_choices = {
        "correct": "correct",
        "c": "correct",
        "incorrect": "incorrect",
        "i": "incorrect",
        "na": "not_applicable",
        "not_applicable": "not_applicable",
    }
    preference_choices = {
        "a": "slot_a",
        "slot_a": "slot_a",
        "b": "slot_b",
        "slot_b": "slot_b",
        "tie": "tie",
        "t": "tie",
    }

    recorded: list[JudgmentRecord] = []
    for row in pending:
        output_fh.write(f"\n=== pair {row['pair_id']} | term: {row['term']}\n")
        if abstracts and row.get("arxiv_id") in abstracts:
            output_fh.write(f"abstract: {abstracts[row['arxiv_id']]}\n")
        output_fh.write(f"definition A: {row['slot_a'] or '(no definition was produced)'}\n")
        output_fh.write(f"definition B: {row['slot_b'] or '(no definition was produced)'}\n")

        if row["slot_a"]:
            acc_a = _ask("accuracy of definition A", accuracy_choices, input_fh, output_fh)
        else:
            acc_a = "not_applicable"
        if row["slot_b"]:
            acc_b = _ask("accuracy of definition B", accuracy_choices, input_fh, output_fh)
        else:
            acc_b = "not_applicable"
        preference = None
        if row["slot_a"] and row["slot_b"]:
            preference = _ask("which definition is better", preference_choices, input_fh, output_fh)

        rec = JudgmentRecord(
            pair_id=row["pair_id"],
            reader_id=reader_id,
            accuracy_a=acc_a,
            accuracy_b=acc_b,
            preference=preference,
            timestamp=now(),
        )
        append_judgments(judgments_path, [rec])
        recorded.append(rec)
    output_fh.write(f"\nrecorded {len(recorded)} judgments\n")
    return recorded
