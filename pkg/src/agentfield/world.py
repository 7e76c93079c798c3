"""Torus geometry, agent placement, neighborhoods, and movement."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, NamedTuple


class MoveCommand(Enum):
    """The five movement decisions an agent can make. Values are the wire forms."""

    X_PLUS = "x+1"
    X_MINUS = "x-1"
    Y_PLUS = "y+1"
    Y_MINUS = "y-1"
    STAY = "stay"

    @classmethod
    def from_token(cls, token: str) -> "MoveCommand":
        for cmd in cls:
            if cmd.value == token:
                return cmd
        raise ValueError(f"unknown move command token: {token!r}")


# Fixed presentation order used by metric tables.
MOVE_ORDER = (
    MoveCommand.X_PLUS,
    MoveCommand.X_MINUS,
    MoveCommand.Y_PLUS,
    MoveCommand.Y_MINUS,
    MoveCommand.STAY,
)


class Position(NamedTuple):
    x: int
    y: int


class Message(NamedTuple):
    """One delivered message: who sent it and what it said."""

    sender: str
    body: str


@dataclass(frozen=True)
class WorldConfig:
    """Static simulation parameters.

    message_range is a Chebyshev distance; a value of 0 means agents only hear
    others sharing their exact cell.
    """

    side_length: int = 50
    num_agents: int = 10
    message_range: int = 5
    num_steps: int = 100
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.side_length < 1:
            raise ValueError("side_length must be >= 1")
        if self.num_agents < 1:
            raise ValueError("num_agents must be >= 1")
        if not (0 <= 2 * self.message_range <= self.side_length):
            raise ValueError(
                f"message_range must be in [0, side_length/2], got {self.message_range}"
            )
        if self.num_steps < 1:
            raise ValueError("num_steps must be >= 1")


NO_MEMORY = "no memory"


def agent_name(agent_id: int) -> str:
    return f"agent{agent_id}"


@dataclass(frozen=True)
class AgentState:
    """One agent's evolving record: where it is, what it remembers, what it heard."""

    id: int
    position: Position
    memory: str = NO_MEMORY
    inbox: tuple[Message, ...] = field(default=())

    @property
    def name(self) -> str:
        return agent_name(self.id)


def torus_chebyshev(a: Position, b: Position, side: int) -> int:
    """Chebyshev distance on a torus of the given side length."""
    dx = abs(a.x - b.x)
    dy = abs(a.y - b.y)
    return max(min(dx, side - dx), min(dy, side - dy))


def apply_move(p: Position, cmd: MoveCommand, side: int) -> Position:
    """Move one cell in the commanded direction, wrapping at the boundary."""
    if cmd is MoveCommand.X_PLUS:
        return Position((p.x + 1) % side, p.y)
    if cmd is MoveCommand.X_MINUS:
        return Position((p.x - 1) % side, p.y)
    if cmd is MoveCommand.Y_PLUS:
        return Position(p.x, (p.y + 1) % side)
    if cmd is MoveCommand.Y_MINUS:
        return Position(p.x, (p.y - 1) % side)
    return p


def neighbors_within(
    positions: Mapping[int, Position], self_id: int, radius: int, side: int
) -> set[int]:
    """Ids of all other agents within Chebyshev `radius` of `self_id` (inclusive).

    Agents sharing the self agent's cell are at distance 0 and are therefore
    included even at radius 0.
    """
    if self_id not in positions:
        raise ValueError(f"unknown agent id {self_id}")
    own = positions[self_id]
    return {
        other_id
        for other_id, pos in positions.items()
        if other_id != self_id and torus_chebyshev(own, pos, side) <= radius
    }


def init_world(config: WorldConfig, rng: random.Random) -> list[AgentState]:
    """Place agents uniformly at random; duplicates cells are allowed."""
    states = []
    for agent_id in range(config.num_agents):
        pos = Position(rng.randrange(config.side_length), rng.randrange(config.side_length))
        states.append(AgentState(id=agent_id, position=pos))
    return states
