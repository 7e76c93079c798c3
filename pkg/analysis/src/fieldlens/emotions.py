"""Six-channel emotion intensities for transcript messages.

Channels are fixed: sadness, joy, love, anger, fear, surprise. The
default classifier is a word-list counter so the pipeline runs offline;
a transformer pipeline with the same interface is optional.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

from .errors import SetupError
from .runio import TranscriptRow

CHANNELS = ("sadness", "joy", "love", "anger", "fear", "surprise")

_WORD_RE = re.compile(r"[a-z']+")

_LEXICON: dict[str, frozenset[str]] = {
    "sadness": frozenset((
        "sad", "sadness", "lonely", "alone", "lost", "miss", "missing",
        "gloomy", "sorry", "cry", "crying", "grief", "quiet", "empty",
    )),
    "joy": frozenset((
        "joy", "happy", "happiness", "glad", "great", "wonderful", "fun",
        "laugh", "laughing", "smile", "bright", "delight", "cheerful",
    )),
    "love": frozenset((
        "love", "loving", "dear", "friend", "friends", "together", "care",
        "caring", "warm", "welcome", "kind", "sweet",
    )),
    "anger": frozenset((
        "angry", "anger", "mad", "furious", "hate", "annoyed", "rage",
        "unfair", "frustrated",
    )),
    "fear": frozenset((
        "fear", "afraid", "scared", "worried", "worry", "danger",
        "dangerous", "dark", "nervous", "dread", "terrified",
    )),
    "surprise": frozenset((
        "surprise", "surprised", "surprising", "sudden", "suddenly",
        "unexpected", "strange", "odd", "wow", "astonished",
    )),
}


class EmotionClassifier(Protocol):
    """Maps one text to six intensities in [0, 1], channel order fixed."""

    @property
    def name(self) -> str: ...

    def score(self, text: str) -> tuple[float, ...]: ...


class LexiconEmotionClassifier:
    """Counts channel words; no hits at all scores a flat 1/6 prior."""

    def __init__(self, lexicon: dict[str, frozenset[str]] | None = None):
        lexicon = lexicon or _LEXICON
        missing = set(CHANNELS) - set(lexicon)
        if missing:
            raise ValueError(f"lexicon misses channels: {sorted(missing)}")
        self._lexicon = lexicon

    @property
    def name(self) -> str:
        return "lexicon"

    def score(self, text: str) -> tuple[float, ...]:
        words = _WORD_RE.findall(text.lower())
        hits = [
            sum(1 for w in words if w in self._lexicon[channel])
            for channel in CHANNELS
        ]
        total = sum(hits)
        if total == 0:
            return tuple(1.0 / len(CHANNELS) for _ in CHANNELS)
        return tuple(h / total for h in hits)


class TransformersEmotionClassifier:
    """Optional transformer pipeline; needs the models extra."""

    def __init__(self, model_name: str = "bhadresh-savani/bert-base-uncased-emotion"):
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise SetupError(
                "transformers is not installed; pip install 'fieldlens[models]'"
            ) from exc
        self._pipe = pipeline("text-classification", model=model_name,
                              top_k=None)
        self._model_name = model_name

    @property
    def name(self) -> str:
        return f"transformers:{self._model_name}"

    def score(self, text: str) -> tuple[float, ...]:
        results = self._pipe(text or " ")[0]
        by_label = {entry["label"].lower(): entry["score"] for entry in results}
        return tuple(
            min(1.0, max(0.0, float(by_label.get(channel, 0.0))))
            for channel in CHANNELS
        )


@dataclass(frozen=True)
class EmotionPoint:
    step: int
    agent: int
    scores: tuple[float, ...]

    def __post_init__(self):
        if len(self.scores) != len(CHANNELS):
            raise ValueError("one score per channel required")
        if not all(0.0 <= s <= 1.0 for s in self.scores):
            raise ValueError("scores must lie in [0, 1]")


def emotion_series(
    rows: Iterable[TranscriptRow],
    classifier: EmotionClassifier | None = None,
) -> list[EmotionPoint]:
    """Score every message, ordered by (step, agent)."""
    classifier = classifier or LexiconEmotionClassifier()
    return [
        EmotionPoint(step=row.step, agent=row.agent,
                     scores=classifier.score(row.message))
        for row in sorted(rows, key=lambda r: (r.step, r.agent))
    ]


def series_by_agent(
    points: Sequence[EmotionPoint],
) -> dict[int, list[EmotionPoint]]:
    grouped: dict[int, list[EmotionPoint]] = {}
    for point in points:
        grouped.setdefault(point.agent, []).append(point)
    return {agent: sorted(group, key=lambda p: p.step)
            for agent, group in sorted(grouped.items())}


def emotion_rows(
    points: Sequence[EmotionPoint],
) -> tuple[list[str], list[list[object]]]:
    header = ["step", "agent", *CHANNELS]
    return header, [
        [p.step, p.agent, *p.scores] for p in points
    ]
