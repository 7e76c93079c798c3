"""Synchronous simulation loop.

Each step runs six procedures for the whole population: message generation,
message delivery, memory update, move generation, move parsing, and finally
simultaneous movement. Every agent sees the same step boundary: messages are
generated before anyone receives, and all moves resolve from pre-move
positions.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

from .backends import CallKey, GenerationParams, TextBackend
from .moves import parse_move
from .prompts import TemplateSet
from .transcript import StepRecord
from .world import (
    AgentState,
    Message,
    Position,
    WorldConfig,
    apply_move,
    init_world,
    neighbors_within,
)


@dataclass(frozen=True)
class EngineSettings:
    params: GenerationParams = GenerationParams()
    max_workers: int = 1

    def __post_init__(self) -> None:
        if self.max_workers < 1:
            raise ValueError("max_workers must be >= 1")


class Simulation:
    """Mutable world state plus the step procedure.

    The backend must be referentially transparent for runs to be
    reproducible; with the scripted backend the whole trajectory is a pure
    function of (config, script, templates).
    """

    def __init__(
        self,
        config: WorldConfig,
        backend: TextBackend,
        templates: TemplateSet,
        settings: EngineSettings | None = None,
    ):
        self.config = config
        self.backend = backend
        self.templates = templates
        self.settings = settings or EngineSettings()
        self.agents: list[AgentState] = init_world(
            config, random.Random(config.rng_seed)
        )
        self.steps_done = 0

    def _generate(self, phase: str, step: int,
                  prompts: dict[int, str]) -> dict[int, str]:
        """Run one generation phase for all agents, in ascending id order.

        With max_workers > 1 the calls overlap, but results are keyed by agent
        id so assembly order never depends on completion order.
        """
        ids = sorted(prompts)
        params = self.settings.params

        def call(agent_id: int) -> str:
            key = CallKey(agent=f"agent{agent_id}", step=step, phase=phase)
            return self.backend.generate(prompts[agent_id], params, key=key)

        if self.settings.max_workers == 1 or len(ids) <= 1:
            return {agent_id: call(agent_id) for agent_id in ids}
        with ThreadPoolExecutor(max_workers=self.settings.max_workers) as pool:
            results = pool.map(call, ids)
            return dict(zip(ids, results))

    def run_step(self) -> list[StepRecord]:
        step = self.steps_done + 1
        agents = self.agents
        side = self.config.side_length
        positions = {a.id: a.position for a in agents}

        # 1. Message generation, from last step's inboxes.
        message_prompts = {
            a.id: self.templates.message.render_for(a, inbox=a.inbox)
            for a in agents
        }
        messages = self._generate("message", step, message_prompts)

        # 2. Delivery: everyone within range at pre-move positions, sender
        # order by id. Messages cross simultaneously, so A hears B's new
        # message even while B hears A's.
        inboxes: dict[int, tuple[Message, ...]] = {}
        for a in agents:
            near = neighbors_within(
                positions, a.id, self.config.message_range, side
            )
            inboxes[a.id] = tuple(
                Message(sender=f"agent{j}", body=messages[j])
                for j in sorted(near)
            )

        # 3. Memory update: old memory plus the fresh inbox, full replacement.
        memory_prompts = {
            a.id: self.templates.memory.render_for(a, inbox=inboxes[a.id])
            for a in agents
        }
        new_memories = self._generate("memory", step, memory_prompts)

        # 4. Move generation from the updated memory; no messages slot.
        move_prompts = {
            a.id: self.templates.move.render_for(
                replace(a, memory=new_memories[a.id])
            )
            for a in agents
        }
        move_raw = self._generate("move", step, move_prompts)

        # 5. Conversion to movement commands.
        parsed = {a.id: parse_move(move_raw[a.id]) for a in agents}

        # 6. Simultaneous action from pre-move positions.
        new_positions: dict[int, Position] = {
            a.id: apply_move(a.position, parsed[a.id][0], side) for a in agents
        }

        records = [
            StepRecord(
                step=step,
                agent=a.id,
                x_before=a.position.x,
                y_before=a.position.y,
                message=messages[a.id],
                inbox=inboxes[a.id],
                memory=new_memories[a.id],
                move_raw=move_raw[a.id],
                move_parsed=parsed[a.id][0],
                parse_ok=parsed[a.id][1],
                x_after=new_positions[a.id].x,
                y_after=new_positions[a.id].y,
            )
            for a in agents
        ]

        self.agents = [
            replace(
                a,
                position=new_positions[a.id],
                memory=new_memories[a.id],
                inbox=inboxes[a.id],
            )
            for a in agents
        ]
        self.steps_done = step
        return records

    def run(
        self,
        on_step: Callable[[list[StepRecord]], None] | None = None,
    ) -> list[StepRecord]:
        """Run the configured number of steps, invoking on_step after each.

        on_step fires before the next step starts, so a consumer that writes
        records out keeps a valid prefix even if a later step dies.
        """
        all_records: list[StepRecord] = []
        for _ in range(self.config.num_steps):
            records = self.run_step()
            all_records.extend(records)
            if on_step is not None:
                on_step(records)
        return all_records
