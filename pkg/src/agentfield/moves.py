"""Conversion of free-form movement text into discrete move commands."""

from __future__ import annotations

import re

from .world import MOVE_ORDER, MoveCommand

# Literal tokens are tried before any synonym; within each tier the earliest
# occurrence in the text wins, ties broken by the listing order below.
_LITERAL_TOKENS: tuple[tuple[str, MoveCommand], ...] = tuple(
    (cmd.value, cmd) for cmd in MOVE_ORDER
)

_SYNONYM_TOKENS: tuple[tuple[str, MoveCommand], ...] = (
    ("right", MoveCommand.X_PLUS),
    ("east", MoveCommand.X_PLUS),
    ("left", MoveCommand.X_MINUS),
    ("west", MoveCommand.X_MINUS),
    ("up", MoveCommand.Y_PLUS),
    ("north", MoveCommand.Y_PLUS),
    ("down", MoveCommand.Y_MINUS),
    ("south", MoveCommand.Y_MINUS),
    ("stay still", MoveCommand.STAY),
    ("remain", MoveCommand.STAY),
)


def _token_pattern(token: str) -> re.Pattern[str]:
    # \b misbehaves around '+' so guard with explicit non-alphanumeric lookarounds.
    return re.compile(
        rf"(?<![A-Za-z0-9]){re.escape(token)}(?![A-Za-z0-9])", re.IGNORECASE
    )


_LITERAL_PATTERNS = tuple((_token_pattern(tok), cmd) for tok, cmd in _LITERAL_TOKENS)
_SYNONYM_PATTERNS = tuple((_token_pattern(tok), cmd) for tok, cmd in _SYNONYM_TOKENS)


def _earliest_match(
    text: str, patterns: tuple[tuple[re.Pattern[str], MoveCommand], ...]
) -> MoveCommand | None:
    best_pos: int | None = None
    best_cmd: MoveCommand | None = None
    for pattern, cmd in patterns:
        m = pattern.search(text)
        if m is not None and (best_pos is None or m.start() < best_pos):
            best_pos = m.start()
            best_cmd = cmd
    return best_cmd


def parse_move(text: str) -> tuple[MoveCommand, bool]:
    """Extract a move command from generated text.

    Returns (command, parse_ok). Text with no recognizable token parses as a
    flagged Stay rather than an error, so a run never halts on odd output.
    """
    cmd = _earliest_match(text, _LITERAL_PATTERNS)
    if cmd is not None:
        return cmd, True
    cmd = _earliest_match(text, _SYNONYM_PATTERNS)
    if cmd is not None:
        return cmd, True
    return MoveCommand.STAY, False


def vocabulary_coverage(text: str) -> set[MoveCommand]:
    """Which commands have at least one recognizable token in `text`.

    Used to validate that a move-phase template offers the full command set,
    whether it uses the canonical tokens or a synonym vocabulary.
    """
    found: set[MoveCommand] = set()
    for pattern, cmd in _LITERAL_PATTERNS + _SYNONYM_PATTERNS:
        if pattern.search(text) is not None:
            found.add(cmd)
    return found
