"""Readers for run and sweep directories.

Everything here parses the on-disk formats the simulation package
documents: transcript.jsonl, clusters.jsonl, TSV metric tables, sweep
aggregates, and message dumps. This package never imports the simulator;
the files are the interface.
"""

from __future__ import annotations

import json
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import InputError

TRANSCRIPT_FIELDS = (
    "step", "agent", "x_before", "y_before", "message", "inbox", "memory",
    "move_raw", "move_parsed", "parse_ok", "x_after", "y_after",
)


@dataclass(frozen=True)
class TranscriptRow:
    step: int
    agent: int
    x_before: int
    y_before: int
    message: str
    inbox: tuple[tuple[str, str], ...]
    memory: str
    move_raw: str
    move_parsed: str
    parse_ok: bool
    x_after: int
    y_after: int

    @property
    def name(self) -> str:
        return f"agent{self.agent}"


def read_transcript(path: Path | str) -> list[TranscriptRow]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no transcript at {path}")
    rows = []
    with path.open(encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            where = f"{path}:{number}"
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{where}: not JSON ({exc.msg})") from exc
            if not isinstance(data, dict):
                raise InputError(f"{where}: expected an object")
            missing = [f for f in TRANSCRIPT_FIELDS if f not in data]
            if missing:
                raise InputError(f"{where}: missing fields {missing}")
            inbox = tuple(
                (entry["from"], entry["text"]) for entry in data["inbox"]
            )
            rows.append(TranscriptRow(
                step=data["step"], agent=data["agent"],
                x_before=data["x_before"], y_before=data["y_before"],
                message=data["message"], inbox=inbox, memory=data["memory"],
                move_raw=data["move_raw"], move_parsed=data["move_parsed"],
                parse_ok=bool(data["parse_ok"]),
                x_after=data["x_after"], y_after=data["y_after"],
            ))
    return rows


def rows_by_step(rows: Iterable[TranscriptRow]) -> dict[int, list[TranscriptRow]]:
    grouped: dict[int, list[TranscriptRow]] = defaultdict(list)
    for row in rows:
        grouped[row.step].append(row)
    return {
        step: sorted(group, key=lambda r: r.agent)
        for step, group in sorted(grouped.items())
    }


def rows_by_agent(rows: Iterable[TranscriptRow]) -> dict[int, list[TranscriptRow]]:
    grouped: dict[int, list[TranscriptRow]] = defaultdict(list)
    for row in rows:
        grouped[row.agent].append(row)
    return {
        agent: sorted(group, key=lambda r: r.step)
        for agent, group in sorted(grouped.items())
    }


def texts_of(rows: Iterable[TranscriptRow], kind: str) -> list[str]:
    """Pull the message or memory text of each row, in input order."""
    if kind not in ("message", "memory"):
        raise ValueError(f"unknown text kind: {kind!r}")
    return [getattr(row, kind) for row in rows]


@dataclass(frozen=True)
class ClusterStep:
    step: int
    eps: int
    labels: tuple[int, ...]  # index = agent id; -1 marks noise

    def members(self) -> dict[int, list[int]]:
        grouped: dict[int, list[int]] = defaultdict(list)
        for agent, label in enumerate(self.labels):
            if label >= 0:
                grouped[label].append(agent)
        return dict(grouped)


def read_clusters(path: Path | str) -> list[ClusterStep]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no cluster file at {path}")
    steps = []
    with path.open(encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            where = f"{path}:{number}"
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{where}: not JSON ({exc.msg})") from exc
            try:
                steps.append(ClusterStep(
                    step=data["step"], eps=data["eps"],
                    labels=tuple(data["labels"]),
                ))
            except (KeyError, TypeError) as exc:
                raise InputError(f"{where}: bad cluster record") from exc
    return steps


def read_tsv(path: Path | str) -> tuple[list[str], list[list[str]]]:
    """Read a tab-separated table, skipping '#' comment lines."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no table at {path}")
    lines = [
        line for line in path.read_text(encoding="utf-8").splitlines()
        if line and not line.startswith("#")
    ]
    if not lines:
        return [], []
    header = lines[0].split("\t")
    return header, [line.split("\t") for line in lines[1:]]


def write_tsv(
    path: Path | str,
    header: Sequence[str],
    rows: Iterable[Sequence[object]],
    comments: Sequence[str] = (),
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    def fmt(value: object) -> str:
        if isinstance(value, float):
            return f"{value:.6f}"
        return str(value)
    with path.open("w", encoding="utf-8") as handle:
        for comment in comments:
            handle.write(f"# {comment}\n")
        handle.write("\t".join(header) + "\n")
        for row in rows:
            handle.write("\t".join(fmt(v) for v in row) + "\n")
    return path


def read_manifest(run_dir: Path | str) -> dict:
    path = Path(run_dir) / "manifest.json"
    if not path.is_file():
        raise InputError(f"no manifest at {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not JSON ({exc.msg})") from exc


def world_shape(manifest: Mapping) -> tuple[int, int, int]:
    """(side_length, num_agents, num_steps) from a run manifest."""
    try:
        world = manifest["config"]["world"]
        return (
            world["side_length"], world["num_agents"], world["num_steps"],
        )
    except (KeyError, TypeError) as exc:
        raise InputError("manifest lacks config.world") from exc


@dataclass(frozen=True)
class MessageRow:
    message_range: int
    trial: int
    step: int
    agent: int
    text: str


def read_message_dump(path: Path | str) -> list[MessageRow]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no message dump at {path}")
    rows = []
    with path.open(encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            where = f"{path}:{number}"
            try:
                data = json.loads(line)
                rows.append(MessageRow(
                    message_range=data["range"], trial=data["trial"],
                    step=data["step"], agent=data["agent"],
                    text=data["text"],
                ))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InputError(f"{where}: bad message record") from exc
    return rows


_RANGE_DIR = re.compile(r"^range_(\d+)$")
_TRIAL_DIR = re.compile(r"^trial_(\d+)$")


def sweep_runs(sweep_dir: Path | str) -> dict[int, list[Path]]:
    """Map each swept range to its trial run directories, both sorted."""
    sweep_dir = Path(sweep_dir)
    if not sweep_dir.is_dir():
        raise InputError(f"no sweep directory at {sweep_dir}")
    runs: dict[int, list[Path]] = {}
    for entry in sorted(sweep_dir.iterdir()):
        match = _RANGE_DIR.match(entry.name)
        if match is None or not entry.is_dir():
            continue
        trials = [
            child for child in sorted(entry.iterdir())
            if child.is_dir() and _TRIAL_DIR.match(child.name)
        ]
        runs[int(match.group(1))] = trials
    if not runs:
        raise InputError(f"{sweep_dir} has no range_* directories")
    return runs


def message_dumps(sweep_dir: Path | str) -> dict[int, Path]:
    """Map each range to its messages/range_XX.jsonl dump."""
    sweep_dir = Path(sweep_dir)
    dumps = {}
    messages = sweep_dir / "messages"
    if messages.is_dir():
        for entry in sorted(messages.iterdir()):
            match = re.match(r"^range_(\d+)\.jsonl$", entry.name)
            if match:
                dumps[int(match.group(1))] = entry
    return dumps
