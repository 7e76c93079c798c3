"""Prompt templates: load, validate, and render per-phase prompt text.

Templates are plain text with {name}, {x}, {y}, {memory}, {messages}, and
{question} slots. Rendering is a direct substitution pass, not str.format, so
braces in agent-generated text can never break or inject anything.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import TemplateError
from .moves import MoveCommand, vocabulary_coverage
from .world import AgentState, Message

NO_MESSAGES = "No Messages"

_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")

# Which slots each phase's template may use. The move prompt deliberately has
# no {messages}: moves are driven by the already-updated memory.
ALLOWED_PLACEHOLDERS = {
    "message": frozenset({"name", "x", "y", "memory", "messages"}),
    "memory": frozenset({"name", "x", "y", "memory", "messages"}),
    "move": frozenset({"name", "x", "y", "memory"}),
    "mbti": frozenset({"name", "memory", "question"}),
}

TEMPLATE_FILES = {
    "message": "message.txt",
    "memory": "memory.txt",
    "move": "move.txt",
    "mbti": "mbti.txt",
}

_DATA_DIR = Path(__file__).parent / "data" / "templates"


def render_messages(inbox: Iterable[Message]) -> str:
    """Format an inbox as one "sender: body" line per message.

    An empty inbox renders as the fixed sentinel so the prompt always has
    something in the received-messages slot.
    """
    lines = [f"{m.sender}: {m.body}" for m in inbox]
    if not lines:
        return NO_MESSAGES
    return "\n".join(lines)


@dataclass(frozen=True)
class PromptTemplate:
    phase: str
    text: str

    def __post_init__(self) -> None:
        if self.phase not in ALLOWED_PLACEHOLDERS:
            raise TemplateError(f"unknown template phase {self.phase!r}")
        allowed = ALLOWED_PLACEHOLDERS[self.phase]
        used = set(_PLACEHOLDER_RE.findall(self.text))
        unknown = used - allowed
        if unknown:
            raise TemplateError(
                f"{self.phase} template uses unsupported placeholders: "
                f"{sorted(unknown)} (allowed: {sorted(allowed)})"
            )

    def render(self, values: dict[str, str]) -> str:
        def substitute(match: re.Match[str]) -> str:
            slot = match.group(1)
            if slot not in values:
                raise TemplateError(
                    f"{self.phase} template slot {{{slot}}} has no value"
                )
            return values[slot]

        return _PLACEHOLDER_RE.sub(substitute, self.text)

    def render_for(
        self,
        agent: AgentState,
        inbox: Iterable[Message] = (),
        question: str | None = None,
    ) -> str:
        values = {
            "name": agent.name,
            "x": str(agent.position.x),
            "y": str(agent.position.y),
            "memory": agent.memory,
            "messages": render_messages(inbox),
        }
        if question is not None:
            values["question"] = question
        return self.render(values)

    def digest(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class TemplateSet:
    message: PromptTemplate
    memory: PromptTemplate
    move: PromptTemplate
    mbti: PromptTemplate

    def __getitem__(self, phase: str) -> PromptTemplate:
        try:
            return getattr(self, phase)
        except AttributeError:
            raise TemplateError(f"unknown template phase {phase!r}") from None

    def digests(self) -> dict[str, str]:
        return {phase: self[phase].digest() for phase in TEMPLATE_FILES}


def _read_template(directory: Path, phase: str) -> PromptTemplate:
    path = directory / TEMPLATE_FILES[phase]
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TemplateError(f"cannot read template {path}: {exc}") from exc
    if not text.strip():
        raise TemplateError(f"template {path} is empty")
    return PromptTemplate(phase=phase, text=text)


def load_templates(directory: str | Path | None = None) -> TemplateSet:
    """Load the four phase templates from a directory (bundled set by default).

    Beyond placeholder validation, the move template must spell out every
    movement command so the model has the full vocabulary in front of it.
    """
    base = Path(directory) if directory is not None else _DATA_DIR
    templates = {phase: _read_template(base, phase) for phase in TEMPLATE_FILES}
    covered = vocabulary_coverage(templates["move"].text)
    missing = set(MoveCommand) - covered
    if missing:
        raise TemplateError(
            "move template must mention every movement command; missing: "
            + ", ".join(sorted(cmd.value for cmd in missing))
        )
    return TemplateSet(**templates)
