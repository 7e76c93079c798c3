"""Personality questionnaire harness: administer, score, and compare.

Agents answer forced-choice A/B questions through the text backend, using
only their accumulated memory as context. Scores reduce to a four-letter
type code plus per-axis percentages, so checkpoints can be compared to see
which axes drifted during a run.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .backends import CallKey, GenerationParams, TextBackend
from .errors import BackendUnavailableError, ConfigError
from .prompts import TemplateSet
from .transcript import StepRecord, records_by_step
from .world import NO_MEMORY, AgentState, Message, Position

AXES = ("EI", "SN", "TF", "JP")
FIRST_POLE = {"EI": "E", "SN": "S", "TF": "T", "JP": "J"}
SECOND_POLE = {"EI": "I", "SN": "N", "TF": "F", "JP": "P"}
UNDECIDED = "?"

_CHOICE_RE = re.compile(r"\b([AB])\b")


@dataclass(frozen=True)
class Question:
    id: int
    axis: str
    pole_a: str
    pole_b: str
    text_a: str
    text_b: str

    def __post_init__(self) -> None:
        if self.axis not in AXES:
            raise ConfigError(f"question {self.id}: unknown axis {self.axis!r}")
        expected = {FIRST_POLE[self.axis], SECOND_POLE[self.axis]}
        if {self.pole_a, self.pole_b} != expected:
            raise ConfigError(
                f"question {self.id}: poles {self.pole_a!r}/{self.pole_b!r} "
                f"do not cover axis {self.axis}"
            )
        if not self.text_a.strip() or not self.text_b.strip():
            raise ConfigError(f"question {self.id}: options must be nonempty")

    def voted_letter(self, choice: str) -> str:
        if choice == "A":
            return self.pole_a
        if choice == "B":
            return self.pole_b
        raise ValueError(f"choice must be 'A' or 'B', got {choice!r}")


_BUNDLED_BANK = Path(__file__).parent / "data" / "mbti_questions.jsonl"


@dataclass(frozen=True)
class QuestionBank:
    questions: tuple[Question, ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for q in self.questions:
            if q.id in seen:
                raise ConfigError(f"duplicate question id {q.id}")
            seen.add(q.id)

    @classmethod
    def from_file(cls, path: str | Path) -> "QuestionBank":
        path = Path(path)
        try:
            raw = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read question bank {path}: {exc}") from exc
        questions: list[Question] = []
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                questions.append(
                    Question(
                        id=int(data["id"]),
                        axis=str(data["axis"]),
                        pole_a=str(data["pole_a"]),
                        pole_b=str(data["pole_b"]),
                        text_a=str(data["text_a"]),
                        text_b=str(data["text_b"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad question: {exc}") from exc
        if not questions:
            raise ConfigError(f"question bank {path} is empty")
        return cls(questions=tuple(questions))

    @classmethod
    def bundled(cls) -> "QuestionBank":
        return cls.from_file(_BUNDLED_BANK)

    def digest(self) -> str:
        canonical = json.dumps(
            [
                {
                    "id": q.id,
                    "axis": q.axis,
                    "pole_a": q.pole_a,
                    "pole_b": q.pole_b,
                    "text_a": q.text_a,
                    "text_b": q.text_b,
                }
                for q in sorted(self.questions, key=lambda q: q.id)
            ],
            sort_keys=True,
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def by_axis(self, axis: str) -> list[Question]:
        return [q for q in self.questions if q.axis == axis]


def parse_choice(text: str, question: Question) -> str | None:
    """Read an A/B answer out of free text.

    First standalone uppercase A or B wins; failing that, a reply that quotes
    exactly one of the two option texts counts as choosing it.
    """
    match = _CHOICE_RE.search(text)
    if match:
        return match.group(1)
    lowered = text.lower()
    # Trailing punctuation is dropped so a paraphrase-free quote still counts.
    option_a = question.text_a.lower().rstrip(".!? ")
    option_b = question.text_b.lower().rstrip(".!? ")
    has_a = option_a in lowered
    has_b = option_b in lowered
    if has_a and not has_b:
        return "A"
    if has_b and not has_a:
        return "B"
    return None


@dataclass(frozen=True)
class AnswerSheet:
    agent: str
    checkpoint_step: int
    bank_digest: str
    choices: dict[int, str | None]
    complete: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "agent": self.agent,
                "checkpoint_step": self.checkpoint_step,
                "bank_digest": self.bank_digest,
                "complete": self.complete,
                "choices": {str(k): v for k, v in sorted(self.choices.items())},
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "AnswerSheet":
        data = json.loads(line)
        return cls(
            agent=str(data["agent"]),
            checkpoint_step=int(data["checkpoint_step"]),
            bank_digest=str(data["bank_digest"]),
            complete=bool(data["complete"]),
            choices={
                int(k): (None if v is None else str(v))
                for k, v in data["choices"].items()
            },
        )


def administer(
    agent: AgentState,
    checkpoint_step: int,
    bank: QuestionBank,
    backend: TextBackend,
    templates: TemplateSet,
    params: GenerationParams | None = None,
) -> AnswerSheet:
    """Put every bank question to one agent snapshot.

    An unparseable reply earns one re-ask; a second failure becomes an
    abstention for that question. A dead backend stops the sheet where it is
    and marks it incomplete rather than losing collected answers.
    """
    params = params or GenerationParams()
    choices: dict[int, str | None] = {}
    complete = True
    for question in bank.questions:
        rendered_question = f"A. {question.text_a}\nB. {question.text_b}"
        prompt = templates.mbti.render_for(agent, question=rendered_question)
        key = CallKey(agent=agent.name, step=checkpoint_step, phase="mbti")
        try:
            choice = parse_choice(backend.generate(prompt, params, key=key), question)
            if choice is None:
                choice = parse_choice(
                    backend.generate(prompt, params, key=key), question
                )
        except BackendUnavailableError:
            complete = False
            break
        choices[question.id] = choice
    return AnswerSheet(
        agent=agent.name,
        checkpoint_step=checkpoint_step,
        bank_digest=bank.digest(),
        choices=choices,
        complete=complete,
    )


@dataclass(frozen=True)
class AxisScore:
    axis: str
    first_count: int
    second_count: int
    abstained: int
    letter: str
    tied: bool

    @property
    def percent_first(self) -> float | None:
        answered = self.first_count + self.second_count
        if answered == 0:
            return None
        return 100.0 * self.first_count / answered

    @property
    def percent_second(self) -> float | None:
        answered = self.first_count + self.second_count
        if answered == 0:
            return None
        return 100.0 * self.second_count / answered


@dataclass(frozen=True)
class TypeResult:
    agent: str
    checkpoint_step: int
    bank_digest: str
    axes: tuple[AxisScore, ...]
    complete: bool

    @property
    def code(self) -> str:
        return "".join(score.letter for score in self.axes)

    def axis(self, name: str) -> AxisScore:
        for score in self.axes:
            if score.axis == name:
                return score
        raise KeyError(name)


def score_sheet(bank: QuestionBank, sheet: AnswerSheet) -> TypeResult:
    """Tally one answer sheet into per-axis scores and a type code.

    Each answered question votes for one pole letter. Equal votes on an axis
    resolve to the second pole with the tie flagged; an axis nobody answered
    shows as '?'.
    """
    if sheet.bank_digest != bank.digest():
        raise ConfigError(
            "answer sheet was collected against a different question bank "
            f"(sheet {sheet.bank_digest[:12]}, bank {bank.digest()[:12]})"
        )
    known_ids = {q.id for q in bank.questions}
    stray = set(sheet.choices) - known_ids
    if stray:
        raise ConfigError(f"answer sheet has unknown question ids: {sorted(stray)}")
    axes: list[AxisScore] = []
    for axis in AXES:
        first = second = abstained = 0
        for question in bank.by_axis(axis):
            choice = sheet.choices.get(question.id)
            if choice is None:
                abstained += 1
                continue
            letter = question.voted_letter(choice)
            if letter == FIRST_POLE[axis]:
                first += 1
            else:
                second += 1
        answered = first + second
        if answered == 0:
            letter, tied = UNDECIDED, False
        elif first > second:
            letter, tied = FIRST_POLE[axis], False
        elif second > first:
            letter, tied = SECOND_POLE[axis], False
        else:
            letter, tied = SECOND_POLE[axis], True
        axes.append(
            AxisScore(
                axis=axis,
                first_count=first,
                second_count=second,
                abstained=abstained,
                letter=letter,
                tied=tied,
            )
        )
    return TypeResult(
        agent=sheet.agent,
        checkpoint_step=sheet.checkpoint_step,
        bank_digest=sheet.bank_digest,
        axes=tuple(axes),
        complete=sheet.complete,
    )


def snapshot_at(
    records: Sequence[StepRecord], checkpoint_step: int
) -> list[AgentState]:
    """Rebuild agent states at a step boundary from the transcript.

    Checkpoint 0 is the world before any step: step-1 starting positions and
    the blank memory. Checkpoint s is the world after step s.
    """
    grouped = records_by_step(records)
    if not grouped:
        raise ValueError("transcript is empty")
    last = max(grouped)
    if checkpoint_step < 0 or checkpoint_step > last:
        raise ValueError(
            f"checkpoint {checkpoint_step} outside transcript range 0..{last}"
        )
    if checkpoint_step == 0:
        first = min(grouped)
        return [
            AgentState(
                id=r.agent,
                position=Position(r.x_before, r.y_before),
                memory=NO_MEMORY,
                inbox=(),
            )
            for r in grouped[first]
        ]
    return [
        AgentState(
            id=r.agent,
            position=Position(r.x_after, r.y_after),
            memory=r.memory,
            inbox=tuple(Message(m.sender, m.body) for m in r.inbox),
        )
        for r in grouped[checkpoint_step]
    ]


@dataclass(frozen=True)
class TypeChange:
    agent: str
    before: str
    after: str
    changed_axes: tuple[str, ...]


def changed_axes(before_code: str, after_code: str) -> tuple[str, ...]:
    """Axes whose letters differ between two four-letter type codes."""
    if len(before_code) != len(AXES) or len(after_code) != len(AXES):
        raise ValueError("type codes must have one letter per axis")
    return tuple(
        axis
        for axis, a, b in zip(AXES, before_code, after_code)
        if a != b
    )


def compare_results(before: TypeResult, after: TypeResult) -> TypeChange:
    """Diff two checkpoints of the same agent on the same question bank."""
    if before.agent != after.agent:
        raise ConfigError(
            f"cannot compare different agents ({before.agent} vs {after.agent})"
        )
    if before.bank_digest != after.bank_digest:
        raise ConfigError(
            "cannot compare results from different question banks "
            f"({before.bank_digest[:12]} vs {after.bank_digest[:12]})"
        )
    return TypeChange(
        agent=before.agent,
        before=before.code,
        after=after.code,
        changed_axes=changed_axes(before.code, after.code),
    )


def result_rows(
    results: Sequence[TypeResult],
) -> tuple[list[str], list[list[object]]]:
    header = [
        "agent", "checkpoint", "type",
        "EI_pct", "SN_pct", "TF_pct", "JP_pct",
        "tied_axes", "complete",
    ]
    rows: list[list[object]] = []
    for result in results:
        percents = [
            "" if s.percent_first is None else f"{s.percent_first:.6f}"
            for s in result.axes
        ]
        tied = ",".join(s.axis for s in result.axes if s.tied)
        rows.append(
            [result.agent, result.checkpoint_step, result.code,
             *percents, tied, int(result.complete)]
        )
    return header, rows
