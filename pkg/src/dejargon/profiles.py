"""Reader profiles and prompt rendering.

Prompts are rendered from versioned template files with named placeholders;
rendering is pure, so identical inputs always produce identical bundles.
"""

from __future__ import annotations

import dataclasses
import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import PreconditionError, StoreError
from .llm_gateway import ModelConfig
from .workspace import Workspace, read_json, write_json

DEFAULT_NO_JARGON_SENTINEL = "NO_JARGON"
RAG_SNIPPET_DELIMITER = "\n\n---\n\n"


@dataclass
class ReaderProfile:
    """A reader's self-described expertise used to personalize prompts."""

    reader_id: str
    description: str
    expertise_areas: list[str] = field(default_factory=list)
    ratings: dict[str, int] | None = None

    def __post_init__(self) -> None:
        if not self.reader_id:
            raise PreconditionError("reader_id must be non-empty")
        if not self.description.strip():
            raise PreconditionError("profile description must be non-empty")
        if self.ratings:
            bad = {k: v for k, v in self.ratings.items() if not 1 <= int(v) <= 5}
            if bad:
                raise PreconditionError(f"ratings must be in [1, 5]: {bad}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ReaderProfile":
        return cls(**d)


@dataclass(frozen=True)
class PromptBundle:
    """A rendered (system, query) prompt pair plus the decoding config."""

    system_text: str
    query_text: str
    model_config: ModelConfig = ModelConfig()

    def __post_init__(self) -> None:
        if not self.system_text.strip() or not self.query_text.strip():
            raise PreconditionError("prompt texts must be non-empty")


def _load_template(name: str, version: str) -> string.Template:
    text = resources.files("dejargon.templates").joinpath(f"{name}_{version}.txt").read_text("utf-8")
    return string.Template(text)


def _template_identifiers(template: string.Template) -> set[str]:
    # string.Template.get_identifiers() only exists on 3.11+
    names = set()
    for match in template.pattern.finditer(template.template):
        name = match.group("named") or match.group("braced")
        if name:
            names.add(name)
    return names


def _render(template: string.Template, mapping: dict[str, str]) -> str:
    """Substitute all placeholders, refusing partial renders.

    Totality is checked against the template's own identifier list rather
    than by scanning the output, because substituted content (e.g. LaTeX in
    abstracts) may legitimately contain dollar signs.
    """
    missing = _template_identifiers(template) - set(mapping)
    if missing:
        raise PreconditionError(f"template placeholders left unfilled: {sorted(missing)}")
    return template.substitute(mapping)


def _describe(profile: ReaderProfile, include_ratings: bool) -> str:
    parts = [profile.description.strip()]
    if include_ratings and profile.ratings:
        lines = [
            f"- {topic}: {score}/5 (where 5 means expert-level knowledge)"
            for topic, score in sorted(profile.ratings.items())
        ]
        parts.append("Self-rated expertise:\n" + "\n".join(lines))
    return "\n\n".join(parts)


def render_identification_prompt(
    profile: ReaderProfile,
    abstract: str,
    model_config: ModelConfig | None = None,
    include_ratings: bool = False,
    sentinel: str = DEFAULT_NO_JARGON_SENTINEL,
    template_version: str = "v1",
) -> PromptBundle:
    """Render the personalized jargon-identification prompt.

    The query embeds the reader description and the abstract verbatim and
    asks for a newline-separated term list, with a fixed sentinel reply
    when no term qualifies (an empty result is legal). Description-only
    personalization is the default; numeric ratings sit behind a flag
    because narrative descriptions proved the more reliable signal.
    """
    if not abstract or not abstract.strip():
        raise PreconditionError("abstract must be non-empty")
    query = _render(
        _load_template("identification", template_version),
        {
            "reader_description": _describe(profile, include_ratings),
            "abstract": abstract,
            "no_jargon_sentinel": sentinel,
        },
    )
    system = _load_template("system", template_version).template
    return PromptBundle(
        system_text=system,
        query_text=query,
        model_config=model_config if model_config is not None else ModelConfig(),
    )


def render_definition_prompt(
    term: str,
    context: str | list[str],
    mode: str = "abstract_only",
    model_config: ModelConfig | None = None,
    template_version: str = "v1",
) -> PromptBundle:
    """Render the definition prompt for one term.

    ``context`` is the abstract for abstract_only mode, or the retrieved
    snippets (joined with a visible delimiter) for rag mode.
    """
    if mode not in ("abstract_only", "rag"):
        raise PreconditionError(f"unknown definition mode {mode!r}")
    if not term or not term.strip():
        raise PreconditionError("term must be non-empty")
    if isinstance(context, list):
        if not context or any(not c.strip() for c in context):
            raise PreconditionError("context snippets must be non-empty")
        context_text = RAG_SNIPPET_DELIMITER.join(context)
    else:
        context_text = context
    if not context_text or not context_text.strip():
        raise PreconditionError("context must be non-empty")
    query = _render(
        _load_template("definition", template_version),
        {"term": term, "context": context_text},
    )
    system = _load_template("system", template_version).template
    return PromptBundle(
        system_text=system,
        query_text=query,
        model_config=model_config if model_config is not None else ModelConfig(),
    )


class ProfileStore:
    """Profiles persisted as one JSON document per reader."""

    def __init__(self, workspace: Workspace):
        self.workspace = workspace

    def path(self, reader_id: str) -> Path:
        return self.workspace.profiles_dir / f"{reader_id}.json"

    def save(self, profile: ReaderProfile) -> None:
        write_json(self.path(profile.reader_id), profile.to_dict())

    def load(self, reader_id: str) -> ReaderProfile:
        path = self.path(reader_id)
        if not path.exists():
            raise StoreError(f"no profile for reader {reader_id!r}")
        return ReaderProfile.from_dict(read_json(path))

    def exists(self, reader_id: str) -> bool:
        return self.path(reader_id).exists()

    def load_all(self) -> list[ReaderProfile]:
        if not self.workspace.profiles_dir.exists():
            return []
        return [
            ReaderProfile.from_dict(read_json(p))
            for p in sorted(self.workspace.profiles_dir.glob("*.json"))
        ]
