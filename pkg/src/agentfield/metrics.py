"""Transcript measurements: hashtags, word counts, moves, stays, hallucinations.

Everything here is a pure function of transcript records (plus cluster labels
where relevant), so any metric can be recomputed from a transcript alone and
must come out identical.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .backends import CallKey, GenerationParams, TextBackend
from .clustering import NOISE, StepClusters
from .errors import BackendUnavailableError
from .transcript import StepRecord, records_by_step
from .world import MOVE_ORDER, MoveCommand

_HASHTAG_RE = re.compile(r"#[A-Za-z0-9_-]+")
_WORD_RE = re.compile(r"[a-z]+")

DEFAULT_STOPWORDS = frozenset("""
a about after all also am an and any are as at be because been before being
but by can could did do does down for from had has have he her here him his
how i if in into is it its just like me more most my no not now of off on
only or other our out over s so some such t than that the their them then
there these they this to too up very was we were what when where which who
will with would you your
""".split())


def extract_hashtags(text: str) -> list[str]:
    """Hashtags in a text, lowercased, deduplicated in order of appearance."""
    seen: list[str] = []
    for match in _HASHTAG_RE.findall(text):
        tag = match.lower()
        if tag not in seen:
            seen.append(tag)
    return seen


@dataclass(frozen=True)
class HashtagStepCount:
    step: int
    active: int
    cumulative: int


def hashtag_progression(records: Iterable[StepRecord]) -> list[HashtagStepCount]:
    """Distinct hashtags per step and the cumulative distinct total."""
    grouped = records_by_step(records)
    seen: set[str] = set()
    out: list[HashtagStepCount] = []
    for step in sorted(grouped):
        active = {
            tag for r in grouped[step] for tag in extract_hashtags(r.message)
        }
        seen.update(active)
        out.append(
            HashtagStepCount(step=step, active=len(active), cumulative=len(seen))
        )
    return out


def total_unique_hashtags(records: Iterable[StepRecord]) -> int:
    progression = hashtag_progression(records)
    return progression[-1].cumulative if progression else 0


@dataclass(frozen=True)
class HashtagLifespan:
    hashtag: str
    first_step: int
    last_step: int
    max_run: int


def _max_run(steps: Sequence[int]) -> int:
    """Longest run of consecutive integers in a sorted unique sequence."""
    best = 0
    run = 0
    previous: int | None = None
    for step in steps:
        run = run + 1 if previous is not None and step == previous + 1 else 1
        best = max(best, run)
        previous = step
    return best


def hashtag_lifespans(records: Iterable[StepRecord]) -> list[HashtagLifespan]:
    """Per hashtag, the longest streak of consecutive steps with any use.

    Presence is population-wide: a tag is alive at a step if any agent's
    message that step carries it.
    """
    grouped = records_by_step(records)
    tag_steps: dict[str, list[int]] = {}
    for step in sorted(grouped):
        for tag in {
            t for r in grouped[step] for t in extract_hashtags(r.message)
        }:
            tag_steps.setdefault(tag, []).append(step)
    return sorted(
        (
            HashtagLifespan(
                hashtag=tag,
                first_step=steps[0],
                last_step=steps[-1],
                max_run=_max_run(steps),
            )
            for tag, steps in tag_steps.items()
        ),
        key=lambda item: (item.first_step, item.hashtag),
    )


def hashtag_lifespans_by_cluster(
    records: Iterable[StepRecord], timeline: Sequence[StepClusters]
) -> list[tuple[int, HashtagLifespan]]:
    """Lifespans computed within each tracked cluster.

    A tag is alive inside cluster L at a step when some member of L used it
    that step. Noise agents belong to no cluster and count nowhere.
    """
    labels_by_step = {sc.step: sc.labels for sc in timeline}
    grouped = records_by_step(records)
    cluster_tag_steps: dict[tuple[int, str], list[int]] = {}
    for step in sorted(grouped):
        labels = labels_by_step.get(step)
        if labels is None:
            continue
        present: set[tuple[int, str]] = set()
        for r in grouped[step]:
            label = labels.get(r.agent, NOISE)
            if label == NOISE:
                continue
            for tag in extract_hashtags(r.message):
                present.add((label, tag))
        for key in present:
            cluster_tag_steps.setdefault(key, []).append(step)
    out = [
        (
            label,
            HashtagLifespan(
                hashtag=tag,
                first_step=steps[0],
                last_step=steps[-1],
                max_run=_max_run(steps),
            ),
        )
        for (label, tag), steps in cluster_tag_steps.items()
    ]
    out.sort(key=lambda item: (item[0], item[1].first_step, item[1].hashtag))
    return out


def move_distribution(records: Iterable[StepRecord]) -> dict[MoveCommand, int]:
    """Count of every parsed move, unparseable ones included as their stay."""
    counts = {cmd: 0 for cmd in MOVE_ORDER}
    for record in records:
        counts[record.move_parsed] += 1
    return counts


@dataclass(frozen=True)
class StayEvent:
    step: int
    agent: int
    in_cluster: bool
    parse_ok: bool


def stay_events(
    records: Iterable[StepRecord], timeline: Sequence[StepClusters]
) -> list[StayEvent]:
    """Every stay decision, flagged by whether the agent sat inside a cluster.

    Cluster membership is read at the position the agent spoke from, matching
    how the timeline was computed.
    """
    labels_by_step = {sc.step: sc.labels for sc in timeline}
    events = [
        StayEvent(
            step=r.step,
            agent=r.agent,
            in_cluster=labels_by_step.get(r.step, {}).get(r.agent, NOISE) != NOISE,
            parse_ok=r.parse_ok,
        )
        for r in records
        if r.move_parsed is MoveCommand.STAY
    ]
    events.sort(key=lambda e: (e.step, e.agent))
    return events


def word_frequencies(
    texts: Iterable[str],
    k: int | None = 100,
    stopwords: frozenset[str] = DEFAULT_STOPWORDS,
) -> list[tuple[str, int]]:
    """Top-k lowercase word counts, stopwords dropped, ties broken by word.

    k=None returns the full ranking.
    """
    counts: dict[str, int] = {}
    for text in texts:
        for word in _WORD_RE.findall(text.lower()):
            if word in stopwords:
                continue
            counts[word] = counts.get(word, 0) + 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k] if k is not None and k >= 0 else ranked


@lru_cache(maxsize=1)
def default_environment_words() -> tuple[str, ...]:
    """Bundled list of landmark words no world actually contains."""
    path = Path(__file__).parent / "data" / "environment_words.txt"
    return tuple(
        line.strip()
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    )


def _lexicon_pattern(word: str) -> re.Pattern[str]:
    # Whole-word match; a multi-word entry matches across any whitespace run.
    parts = [re.escape(p) for p in word.split()]
    body = r"\s+".join(parts)
    return re.compile(
        rf"(?<![A-Za-z0-9]){body}(?![A-Za-z0-9])", re.IGNORECASE
    )


def lexicon_matches(text: str, words: Sequence[str]) -> list[str]:
    """Which lexicon entries occur (whole-word) in the text, lexicon order."""
    return [w for w in words if _lexicon_pattern(w).search(text)]


@dataclass(frozen=True)
class HallucinationEvent:
    step: int
    agent: int
    word: str
    mode: str


@dataclass(frozen=True)
class HallucinationScan:
    events: tuple[HallucinationEvent, ...]
    mode: str
    partial: bool = False

    def total(self) -> int:
        return len(self.events)


def scan_hallucinations(
    records: Iterable[StepRecord],
    words: Sequence[str] | None = None,
) -> HallucinationScan:
    """Lexicon route: flag messages naming environment features that don't exist."""
    words = tuple(words) if words is not None else default_environment_words()
    events = [
        HallucinationEvent(step=r.step, agent=r.agent, word=w, mode="lexicon")
        for r in records
        for w in lexicon_matches(r.message, words)
    ]
    events.sort(key=lambda e: (e.step, e.agent, e.word))
    return HallucinationScan(events=tuple(events), mode="lexicon")


_JUDGE_PROMPT = """\
You are auditing one message written by an agent on a bare grid world. The
world has coordinates and other agents on it, and nothing else: no objects,
no terrain, no landmarks.

[Message]
[{message}]

[Candidate words]
{words}

[Instruction]
Reply with exactly those candidate words that this message talks about as
real features of the world, separated by commas. If there are none, reply
with the single word none.
"""


def judge_hallucinations(
    records: Iterable[StepRecord],
    backend: TextBackend,
    params: GenerationParams | None = None,
    words: Sequence[str] | None = None,
) -> HallucinationScan:
    """Judge route: ask a model which candidate words a message treats as real.

    Only messages that contain a candidate word at all are sent out, and a
    word claimed by the judge counts only if it literally occurs in the
    message, so the judge can narrow the lexicon route but never invent
    events. A backend failure ends the scan early with partial=True instead
    of discarding what was already judged.
    """
    words = tuple(words) if words is not None else default_environment_words()
    params = params or GenerationParams()
    events: list[HallucinationEvent] = []
    partial = False
    for r in sorted(records, key=lambda r: (r.step, r.agent)):
        candidates = lexicon_matches(r.message, words)
        if not candidates:
            continue
        prompt = _JUDGE_PROMPT.format(
            message=r.message, words=", ".join(words)
        )
        key = CallKey(agent=r.name, step=r.step, phase="judge")
        try:
            verdict = backend.generate(prompt, params, key=key)
        except BackendUnavailableError:
            partial = True
            break
        claimed = lexicon_matches(verdict, words)
        for w in claimed:
            if w in candidates:
                events.append(
                    HallucinationEvent(
                        step=r.step, agent=r.agent, word=w, mode="judge"
                    )
                )
    return HallucinationScan(events=tuple(events), mode="judge", partial=partial)


@dataclass(frozen=True)
class ClusterStepStats:
    step: int
    num_clusters: int
    largest: int
    noise: int


def cluster_stats(timeline: Sequence[StepClusters]) -> list[ClusterStepStats]:
    out: list[ClusterStepStats] = []
    for sc in timeline:
        members = sc.members()
        sizes = [len(v) for v in members.values()]
        noise = sum(1 for label in sc.labels.values() if label == NOISE)
        out.append(
            ClusterStepStats(
                step=sc.step,
                num_clusters=len(members),
                largest=max(sizes) if sizes else 0,
                noise=noise,
            )
        )
    return out


def write_tsv(
    path: str | Path,
    header: Sequence[str],
    rows: Iterable[Sequence[object]],
    comments: Sequence[str] = (),
) -> None:
    """Write a TSV with optional leading '#' comment lines.

    Floats are fixed to six decimals so recomputing a metric reproduces the
    file byte for byte.
    """
    with Path(path).open("w", encoding="utf-8") as handle:
        for comment in comments:
            handle.write(f"# {comment}\n")
        handle.write("\t".join(header) + "\n")
        for row in rows:
            rendered = [
                f"{value:.6f}" if isinstance(value, float) else str(value)
                for value in row
            ]
            handle.write("\t".join(rendered) + "\n")


def read_tsv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Read a TSV written by write_tsv, skipping comment lines."""
    lines = [
        line
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line and not line.startswith("#")
    ]
    if not lines:
        return [], []
    header = lines[0].split("\t")
    return header, [line.split("\t") for line in lines[1:]]


def move_distribution_rows(
    counts: Mapping[MoveCommand, int],
) -> tuple[list[str], list[list[object]]]:
    total = sum(counts.values())
    rows: list[list[object]] = [
        [cmd.value, counts.get(cmd, 0),
         (counts.get(cmd, 0) / total) if total else 0.0]
        for cmd in MOVE_ORDER
    ]
    return ["move", "count", "fraction"], rows


def hashtag_progression_rows(
    progression: Sequence[HashtagStepCount],
) -> tuple[list[str], list[list[object]]]:
    return (
        ["step", "active", "cumulative"],
        [[p.step, p.active, p.cumulative] for p in progression],
    )


def hashtag_lifespan_rows(
    lifespans: Sequence[HashtagLifespan],
) -> tuple[list[str], list[list[object]]]:
    return (
        ["hashtag", "first_step", "last_step", "max_run"],
        [
            [l.hashtag, l.first_step, l.last_step, l.max_run]
            for l in lifespans
        ],
    )


def cluster_lifespan_rows(
    items: Sequence[tuple[int, HashtagLifespan]],
) -> tuple[list[str], list[list[object]]]:
    return (
        ["cluster", "hashtag", "first_step", "last_step", "max_run"],
        [
            [label, l.hashtag, l.first_step, l.last_step, l.max_run]
            for label, l in items
        ],
    )


def stay_event_rows(
    events: Sequence[StayEvent],
) -> tuple[list[str], list[list[object]]]:
    return (
        ["step", "agent", "in_cluster", "parse_ok"],
        [
            [e.step, e.agent, int(e.in_cluster), int(e.parse_ok)]
            for e in events
        ],
    )


def word_frequency_rows(
    frequencies: Sequence[tuple[str, int]],
) -> tuple[list[str], list[list[object]]]:
    return ["word", "count"], [[w, c] for w, c in frequencies]


def hallucination_rows(
    scan: HallucinationScan,
) -> tuple[list[str], list[list[object]]]:
    return (
        ["step", "agent", "word", "mode"],
        [[e.step, e.agent, e.word, e.mode] for e in scan.events],
    )


def cluster_stats_rows(
    stats: Sequence[ClusterStepStats],
) -> tuple[list[str], list[list[object]]]:
    return (
        ["step", "num_clusters", "largest", "noise"],
        [[s.step, s.num_clusters, s.largest, s.noise] for s in stats],
    )
