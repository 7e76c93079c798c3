"""Spread of a projected corpus, and per-condition diversity tables."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence

import numpy as np

from .embedding import TextEncoder, embed_texts
from .runio import MessageRow, message_dumps, read_message_dump, write_tsv


def diversity(points: Sequence[Sequence[float]] | np.ndarray) -> float:
    """Spread of points about their centroid.

    Total squared Euclidean distance from the centroid over n - 1 (the
    unbiased-variance normalization, summed across coordinates). Two
    points at distance d score d^2 / 2, so the reference pair at
    distance 2 scores exactly 2. Zero iff all points coincide;
    translation-invariant; scales with the square of any uniform
    scaling. A single point scores 0.
    """
    array = np.asarray(points, dtype=float)
    if array.size == 0:
        raise ValueError("diversity needs at least one point")
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    n = array.shape[0]
    if n == 1:
        return 0.0
    centroid = array.mean(axis=0)
    return float(((array - centroid) ** 2).sum() / (n - 1))


def _trial_texts(rows: Sequence[MessageRow]) -> dict[int, list[str]]:
    grouped: dict[int, list[str]] = defaultdict(list)
    for row in sorted(rows, key=lambda r: (r.trial, r.step, r.agent)):
        grouped[row.trial].append(row.text)
    return dict(grouped)


def diversity_rows(
    sweep_dir: Path | str,
    encoder: TextEncoder | None = None,
    seed: int = 0,
) -> tuple[list[str], list[list[object]]]:
    """Message diversity per (range, trial), plus mean/std and a pooled
    value per range.

    Each trial's messages are embedded and projected on their own; the
    pooled row projects all of a range's messages together. Both views
    are reported because averaging per-trial values and pooling answer
    slightly different questions.
    """
    rows: list[list[object]] = []
    for range_value, dump in sorted(message_dumps(sweep_dir).items()):
        messages = read_message_dump(dump)
        per_trial: list[float] = []
        for trial, texts in sorted(_trial_texts(messages).items()):
            points, _ = embed_texts(texts, encoder=encoder, seed=seed)
            value = diversity(points)
            per_trial.append(value)
            rows.append([range_value, f"trial_{trial:02d}", value])
        if per_trial:
            rows.append([range_value, "mean", float(np.mean(per_trial))])
            rows.append([range_value, "std", float(np.std(per_trial))])
            pooled_texts = [
                row.text for row in
                sorted(messages, key=lambda r: (r.trial, r.step, r.agent))
            ]
            points, _ = embed_texts(pooled_texts, encoder=encoder, seed=seed)
            rows.append([range_value, "pooled", diversity(points)])
    return ["range", "series", "diversity"], rows


def write_diversity_table(
    sweep_dir: Path | str,
    out_path: Path | str,
    encoder: TextEncoder | None = None,
    seed: int = 0,
) -> Path:
    header, rows = diversity_rows(sweep_dir, encoder=encoder, seed=seed)
    return write_tsv(
        out_path, header, rows,
        comments=(f"projection seed {seed}",),
    )
