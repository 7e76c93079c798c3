"""Transcript records: one JSON line per agent per step.

The on-disk schema is the package's main data interface, so field names and
order are fixed here and nowhere else.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import TranscriptError
from .world import Message, MoveCommand, Position

FIELD_ORDER = (
    "step", "agent", "name", "x_before", "y_before", "message", "inbox",
    "memory", "move_raw", "move_parsed", "parse_ok", "x_after", "y_after",
)


@dataclass(frozen=True)
class StepRecord:
    """Everything one agent did during one step."""

    step: int
    agent: int
    x_before: int
    y_before: int
    message: str
    inbox: tuple[Message, ...]
    memory: str
    move_raw: str
    move_parsed: MoveCommand
    parse_ok: bool
    x_after: int
    y_after: int

    @property
    def name(self) -> str:
        return f"agent{self.agent}"

    @property
    def position_before(self) -> Position:
        return Position(self.x_before, self.y_before)

    @property
    def position_after(self) -> Position:
        return Position(self.x_after, self.y_after)

    def to_json(self) -> str:
        payload = {
            "step": self.step,
            "agent": self.agent,
            "name": self.name,
            "x_before": self.x_before,
            "y_before": self.y_before,
            "message": self.message,
            "inbox": [{"from": m.sender, "text": m.body} for m in self.inbox],
            "memory": self.memory,
            "move_raw": self.move_raw,
            "move_parsed": self.move_parsed.value,
            "parse_ok": self.parse_ok,
            "x_after": self.x_after,
            "y_after": self.y_after,
        }
        return json.dumps(payload, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str, where: str = "<line>") -> "StepRecord":
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TranscriptError(f"{where}: not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise TranscriptError(f"{where}: record must be an object")
        try:
            inbox = tuple(
                Message(sender=str(m["from"]), body=str(m["text"]))
                for m in data["inbox"]
            )
            return cls(
                step=int(data["step"]),
                agent=int(data["agent"]),
                x_before=int(data["x_before"]),
                y_before=int(data["y_before"]),
                message=str(data["message"]),
                inbox=inbox,
                memory=str(data["memory"]),
                move_raw=str(data["move_raw"]),
                move_parsed=MoveCommand.from_token(str(data["move_parsed"])),
                parse_ok=bool(data["parse_ok"]),
                x_after=int(data["x_after"]),
                y_after=int(data["y_after"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TranscriptError(f"{where}: malformed record: {exc}") from exc


class TranscriptWriter:
    """Appends step records to a JSONL file, flushing after every step.

    Flushing per step means a run killed mid-flight leaves a valid prefix on
    disk instead of a torn line.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._handle: IO[str] | None = self.path.open("w", encoding="utf-8")

    def write_step(self, records: Iterable[StepRecord]) -> None:
        if self._handle is None:
            raise ValueError("transcript writer is closed")
        for record in records:
            self._handle.write(record.to_json() + "\n")
        self._handle.flush()

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __enter__(self) -> "TranscriptWriter":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


def read_transcript(path: str | Path) -> Iterator[StepRecord]:
    """Yield records from a transcript file in file order."""
    path = Path(path)
    try:
        handle = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise TranscriptError(f"cannot read transcript {path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            yield StepRecord.from_json(line, where=f"{path}:{lineno}")


def load_transcript(path: str | Path) -> list[StepRecord]:
    return list(read_transcript(path))


def records_by_step(records: Iterable[StepRecord]) -> dict[int, list[StepRecord]]:
    """Group records by step, each group sorted by agent id."""
    grouped: dict[int, list[StepRecord]] = {}
    for record in records:
        grouped.setdefault(record.step, []).append(record)
    for group in grouped.values():
        group.sort(key=lambda r: r.agent)
    return grouped
