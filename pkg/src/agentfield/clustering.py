"""Density clustering of agent positions on the torus.

DBSCAN over torus Chebyshev distance, with the message-reception radius as
eps: a cluster is a group that can hear each other, directly or through
chains. min_pts=2 makes this exactly the connected components of the
within-range graph, with singletons as noise.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import TranscriptError
from .transcript import StepRecord, records_by_step
from .world import Position, torus_chebyshev

NOISE = -1


def dbscan_labels(
    positions: Mapping[int, Position],
    eps: int,
    side: int,
    min_pts: int = 2,
) -> dict[int, int]:
    """Label positions with DBSCAN cluster ids; noise points get NOISE.

    The neighborhood of a point includes the point itself, so min_pts=2 means
    "at least one other agent within eps". Ids are visited in sorted order and
    labels are dense, numbered by first appearance, so output is deterministic
    for a given input.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    ids = sorted(positions)

    def neighborhood(i: int) -> list[int]:
        p = positions[i]
        return [
            j for j in ids if torus_chebyshev(p, positions[j], side) <= eps
        ]

    labels: dict[int, int] = {}
    next_label = 0
    for i in ids:
        if i in labels:
            continue
        seeds = neighborhood(i)
        if len(seeds) < min_pts:
            labels[i] = NOISE
            continue
        label = next_label
        next_label += 1
        labels[i] = label
        queue = deque(seeds)
        while queue:
            j = queue.popleft()
            if labels.get(j) == NOISE:
                labels[j] = label  # border point reclaimed from noise
            if j in labels:
                continue
            labels[j] = label
            j_neighbors = neighborhood(j)
            if len(j_neighbors) >= min_pts:
                queue.extend(j_neighbors)
    return labels


def clusters_from_labels(labels: Mapping[int, int]) -> dict[int, list[int]]:
    """Invert a labeling into label -> sorted member ids, noise excluded."""
    clusters: dict[int, list[int]] = {}
    for agent_id, label in labels.items():
        if label == NOISE:
            continue
        clusters.setdefault(label, []).append(agent_id)
    for members in clusters.values():
        members.sort()
    return clusters


@dataclass(frozen=True)
class StepClusters:
    step: int
    eps: int
    labels: dict[int, int]

    def members(self) -> dict[int, list[int]]:
        return clusters_from_labels(self.labels)

    def label_of(self, agent_id: int) -> int:
        return self.labels[agent_id]

    def to_json(self) -> str:
        ids = sorted(self.labels)
        if ids != list(range(len(ids))):
            raise ValueError("labels must cover a dense 0..n-1 id range")
        payload = {
            "step": self.step,
            "eps": self.eps,
            "labels": [self.labels[i] for i in ids],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, line: str, where: str = "<line>") -> "StepClusters":
        try:
            data = json.loads(line)
            return cls(
                step=int(data["step"]),
                eps=int(data["eps"]),
                labels={
                    i: int(label) for i, label in enumerate(data["labels"])
                },
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise TranscriptError(f"{where}: malformed cluster record: {exc}") from exc


def _match_labels(
    previous: Mapping[int, int], raw: Mapping[int, int], next_fresh: int
) -> tuple[dict[int, int], int]:
    """Carry cluster identities across one step boundary.

    Each raw cluster is renamed to the previous label it overlaps most, ties
    broken toward the lower previous label then the lower raw label; each
    previous label is given away at most once. Unmatched clusters get fresh
    labels that never recycle earlier ones.
    """
    prev_members: dict[int, set[int]] = {}
    for agent_id, label in previous.items():
        if label != NOISE:
            prev_members.setdefault(label, set()).add(agent_id)
    raw_members = clusters_from_labels(raw)

    pairs = []
    for raw_id, members in raw_members.items():
        for prev_label, prev_set in prev_members.items():
            overlap = len(prev_set.intersection(members))
            if overlap > 0:
                pairs.append((-overlap, prev_label, raw_id))
    pairs.sort()

    rename: dict[int, int] = {}
    used_prev: set[int] = set()
    for neg_overlap, prev_label, raw_id in pairs:
        if raw_id in rename or prev_label in used_prev:
            continue
        rename[raw_id] = prev_label
        used_prev.add(prev_label)

    for raw_id in sorted(raw_members):
        if raw_id not in rename:
            rename[raw_id] = next_fresh
            next_fresh += 1

    matched = {
        agent_id: (NOISE if label == NOISE else rename[label])
        for agent_id, label in raw.items()
    }
    return matched, next_fresh


def cluster_timeline(
    step_positions: Sequence[Mapping[int, Position]],
    eps: int,
    side: int,
    min_pts: int = 2,
    first_step: int = 1,
) -> list[StepClusters]:
    """Cluster every step and thread labels through time by member overlap.

    A cluster that keeps most of its members keeps its label; genuinely new
    groups get labels never seen before, so a label names one social group
    for its whole life.
    """
    timeline: list[StepClusters] = []
    previous: dict[int, int] = {}
    next_fresh = 0
    for offset, positions in enumerate(step_positions):
        raw = dbscan_labels(positions, eps, side, min_pts=min_pts)
        matched, next_fresh = _match_labels(previous, raw, next_fresh)
        timeline.append(
            StepClusters(step=first_step + offset, eps=eps, labels=matched)
        )
        previous = matched
    return timeline


def timeline_from_records(
    records: Iterable[StepRecord],
    eps: int,
    side: int,
    min_pts: int = 2,
) -> list[StepClusters]:
    """Cluster a transcript using the positions agents spoke from."""
    grouped = records_by_step(records)
    steps = sorted(grouped)
    if steps and steps != list(range(steps[0], steps[0] + len(steps))):
        raise TranscriptError("transcript steps are not contiguous")
    step_positions = [
        {r.agent: r.position_before for r in grouped[s]} for s in steps
    ]
    return cluster_timeline(
        step_positions, eps, side, min_pts=min_pts,
        first_step=steps[0] if steps else 1,
    )


def write_clusters(path: str | Path, timeline: Iterable[StepClusters]) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for step_clusters in timeline:
            handle.write(step_clusters.to_json() + "\n")


def read_clusters(path: str | Path) -> list[StepClusters]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise TranscriptError(f"cannot read clusters {path}: {exc}") from exc
    return [
        StepClusters.from_json(line, where=f"{path}:{lineno}")
        for lineno, line in enumerate(lines, start=1)
        if line.strip()
    ]
