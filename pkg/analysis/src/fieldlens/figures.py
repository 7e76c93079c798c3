"""Figure rendering for run and sweep directories.

Every figure is a pure function of on-disk inputs plus the seeds recorded
in render_meta.json, so reruns reproduce images exactly. Rendering is
partial by design: each figure checks its own inputs and missing ones are
reported, not fatal.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diversity import diversity_rows
from .embedding import EmbeddedCorpus, TextEncoder, embed_corpus, embed_texts
from .emotions import (
    CHANNELS,
    EmotionClassifier,
    emotion_series,
    series_by_agent,
)
from .errors import InputError
from .runio import (
    TranscriptRow,
    message_dumps,
    read_clusters,
    read_manifest,
    read_message_dump,
    read_transcript,
    read_tsv,
    rows_by_agent,
    sweep_runs,
    world_shape,
    write_tsv,
)

MOVE_TOKENS = ("x+1", "x-1", "y+1", "y-1", "stay")

_CHANNEL_COLORS = {
    "sadness": "#4c72b0", "joy": "#dd8452", "love": "#c44e52",
    "anger": "#8c1a1a", "fear": "#55a868", "surprise": "#8172b3",
}


def _agent_color(agent: int):
    return plt.get_cmap("tab10")(agent % 10)


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


@dataclass
class RenderReport:
    """What a rendering pass produced and what it had to skip."""

    written: list[Path] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def merge(self, other: "RenderReport") -> None:
        self.written.extend(other.written)
        self.skipped.extend(other.skipped)


def fig_move_distribution(table_path: Path, out: Path) -> Path:
    header, rows = read_tsv(table_path)
    counts = {row[0]: int(row[1]) for row in rows}
    fig, ax = plt.subplots(figsize=(5, 3.2))
    values = [counts.get(token, 0) for token in MOVE_TOKENS]
    ax.bar(MOVE_TOKENS, values, color="#4c72b0")
    ax.set_xlabel("move")
    ax.set_ylabel("count")
    ax.set_title("move distribution")
    fig.tight_layout()
    return _save(fig, out)


def _path_segments(rows: Sequence[TranscriptRow]) -> list[list[tuple[int, int]]]:
    """Per-step positions split into segments wherever the torus wraps."""
    segments: list[list[tuple[int, int]]] = []
    current: list[tuple[int, int]] = []
    previous: tuple[int, int] | None = None
    for row in rows:
        point = (row.x_before, row.y_before)
        if previous is not None and (
            abs(point[0] - previous[0]) > 1 or abs(point[1] - previous[1]) > 1
        ):
            segments.append(current)
            current = []
        current.append(point)
        previous = point
    last = rows[-1]
    end = (last.x_after, last.y_after)
    if abs(end[0] - previous[0]) > 1 or abs(end[1] - previous[1]) > 1:
        segments.append(current)
        current = [end]
    else:
        current.append(end)
    segments.append(current)
    return segments


def fig_trajectories(
    rows: Sequence[TranscriptRow],
    side: int,
    out: Path,
    final_labels: Sequence[int] | None = None,
) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    by_agent = rows_by_agent(rows)
    for agent, agent_rows in by_agent.items():
        color = _agent_color(agent)
        for segment in _path_segments(agent_rows):
            xs = [p[0] for p in segment]
            ys = [p[1] for p in segment]
            ax.plot(xs, ys, color=color, linewidth=1.0, alpha=0.7)
        stays = [
            (r.x_before, r.y_before) for r in agent_rows
            if (r.x_before, r.y_before) == (r.x_after, r.y_after)
        ]
        if stays:
            ax.scatter([p[0] for p in stays], [p[1] for p in stays],
                       color=color, marker="s", s=12, alpha=0.5)
        last = agent_rows[-1]
        edge = "black"
        if final_labels is not None and final_labels[agent] >= 0:
            edge = plt.get_cmap("Set2")(final_labels[agent] % 8)
        ax.scatter([last.x_after], [last.y_after], color=color, s=90,
                   edgecolors=edge, linewidths=2.0, zorder=3,
                   label=f"agent{agent}")
    ax.set_xlim(-0.5, side - 0.5)
    ax.set_ylim(-0.5, side - 0.5)
    ax.set_aspect("equal")
    ax.set_title("trajectories (squares = stays, ring = final cluster)")
    ax.legend(fontsize=6, loc="upper right")
    fig.tight_layout()
    return _save(fig, out)


def fig_stay_timeline(table_path: Path, out: Path) -> Path:
    header, rows = read_tsv(table_path)
    fig, ax = plt.subplots(figsize=(6, 3.2))
    in_cluster = [(int(r[0]), int(r[1])) for r in rows if r[2] == "1"]
    outside = [(int(r[0]), int(r[1])) for r in rows if r[2] != "1"]
    if in_cluster:
        ax.scatter([p[0] for p in in_cluster], [p[1] for p in in_cluster],
                   color="#2a9d8f", s=14, label="stay in cluster")
    if outside:
        ax.scatter([p[0] for p in outside], [p[1] for p in outside],
                   color="#aaaaaa", s=14, label="stay alone")
    ax.set_xlabel("step")
    ax.set_ylabel("agent")
    ax.set_title("stay events")
    if in_cluster or outside:
        ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out)


def fig_word_cloud(table_path: Path, out: Path, seed: int = 0,
                   max_words: int = 60) -> Path:
    header, rows = read_tsv(table_path)
    pairs = [(row[0], int(row[1])) for row in rows[:max_words]]
    rng = random.Random(seed)
    fig, ax = plt.subplots(figsize=(6, 4))
    if pairs:
        top = max(count for _, count in pairs)
        for word, count in pairs:
            size = 8 + 28 * (count / top)
            ax.text(rng.uniform(0.05, 0.8), rng.uniform(0.05, 0.92), word,
                    fontsize=size, color=_agent_color(rng.randrange(10)),
                    alpha=0.85)
    ax.set_axis_off()
    ax.set_title("message vocabulary (size = frequency)")
    fig.tight_layout()
    return _save(fig, out)


def fig_hallucination_map(
    table_path: Path,
    rows: Sequence[TranscriptRow],
    side: int,
    out: Path,
) -> Path:
    header, event_rows = read_tsv(table_path)
    position = {(r.step, r.agent): (r.x_before, r.y_before) for r in rows}
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    seen: set[str] = set()
    for row in event_rows:
        step, agent, word = int(row[0]), int(row[1]), row[2]
        where = position.get((step, agent))
        if where is None:
            continue
        ax.scatter([where[0]], [where[1]], color=_agent_color(agent), s=40,
                   marker="x")
        if word not in seen:  # label each word once to keep the map legible
            ax.annotate(word, where, fontsize=7, xytext=(3, 3),
                        textcoords="offset points")
            seen.add(word)
    ax.set_xlim(-0.5, side - 0.5)
    ax.set_ylim(-0.5, side - 0.5)
    ax.set_aspect("equal")
    ax.set_title("where invented landmarks were mentioned")
    fig.tight_layout()
    return _save(fig, out)


def fig_hallucination_timeline(table_path: Path, num_steps: int,
                               out: Path) -> Path:
    header, rows = read_tsv(table_path)
    counts = Counter(int(row[0]) for row in rows)
    steps = list(range(1, num_steps + 1))
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.bar(steps, [counts.get(s, 0) for s in steps], color="#c44e52")
    ax.set_xlabel("step")
    ax.set_ylabel("mentions")
    ax.set_title("invented-landmark mentions per step")
    fig.tight_layout()
    return _save(fig, out)


def fig_hashtag_timeline(table_path: Path, out: Path) -> Path:
    header, rows = read_tsv(table_path)
    steps = [int(r[0]) for r in rows]
    active = [int(r[1]) for r in rows]
    cumulative = [int(r[2]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(steps, cumulative, color="#4c72b0", label="cumulative unique")
    ax.plot(steps, active, color="#dd8452", label="active")
    ax.set_xlabel("step")
    ax.set_ylabel("hashtags")
    ax.set_title("hashtag adoption")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out)


def fig_emotions(
    rows: Sequence[TranscriptRow],
    out: Path,
    classifier: EmotionClassifier | None = None,
) -> Path:
    points = emotion_series(rows, classifier=classifier)
    grouped = series_by_agent(points)
    n = len(grouped)
    ncols = min(5, max(1, n))
    nrows = math.ceil(n / ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(2.6 * ncols, 2.2 * nrows),
                             sharex=True, sharey=True, squeeze=False)
    for index, (agent, series) in enumerate(grouped.items()):
        ax = axes[index // ncols][index % ncols]
        steps = [p.step for p in series]
        for channel_index, channel in enumerate(CHANNELS):
            ax.plot(steps, [p.scores[channel_index] for p in series],
                    color=_CHANNEL_COLORS[channel], linewidth=0.9,
                    label=channel)
        ax.set_title(f"agent{agent}", fontsize=8)
        ax.set_ylim(-0.05, 1.05)
    for index in range(n, nrows * ncols):
        axes[index // ncols][index % ncols].set_axis_off()
    handles, labels = axes[0][0].get_legend_handles_labels()
    fig.legend(handles, labels, ncol=6, fontsize=7, loc="lower center")
    fig.suptitle("emotion intensity per message", fontsize=10)
    fig.tight_layout(rect=(0, 0.06, 1, 0.96))
    return _save(fig, out)


def fig_embeddings(
    message_corpus: EmbeddedCorpus,
    memory_corpus: EmbeddedCorpus,
    out: Path,
) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(9, 4.2))
    for ax, corpus, title in (
        (axes[0], message_corpus, "messages"),
        (axes[1], memory_corpus, "memories"),
    ):
        points = corpus.points
        for agent in corpus.agents:
            mask = [item.agent == agent for item in corpus.items]
            ax.scatter(points[mask, 0], points[mask, 1], s=10,
                       color=_agent_color(agent), label=f"agent{agent}")
        ax.set_title(f"{title} ({corpus.projection})", fontsize=9)
    axes[0].legend(fontsize=6)
    fig.suptitle(f"2D projection, encoder {message_corpus.encoder}",
                 fontsize=10)
    fig.tight_layout()
    return _save(fig, out)


def fig_mbti_axes(results_path: Path, out: Path) -> Path:
    header, rows = read_tsv(results_path)
    checkpoints = sorted({int(r[1]) for r in rows})
    if not checkpoints:
        raise InputError(f"{results_path}: no rows")
    last = checkpoints[-1]
    axes_names = ("EI", "SN", "TF", "JP")
    entries = []
    for row in rows:
        if int(row[1]) != last:
            continue
        leanings = [float(v) if v else 50.0 for v in row[3:7]]
        entries.append((row[0], row[2], leanings))
    entries.sort(key=lambda e: (len(e[0]), e[0]))  # agent2 before agent10
    data = np.array([e[2] for e in entries])
    fig, ax = plt.subplots(figsize=(5, 0.5 + 0.4 * len(entries)))
    image = ax.imshow(data, cmap="RdYlBu", vmin=0, vmax=100, aspect="auto")
    ax.set_xticks(range(4), axes_names)
    ax.set_yticks(range(len(entries)),
                  [f"{name} ({code})" for name, code, _ in entries])
    ax.set_title(f"axis leanings at step {last} (% toward first pole)")
    fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    return _save(fig, out)


def _sorted_ranges(rows: Sequence[Sequence[str]]) -> list[str]:
    return sorted({row[0] for row in rows}, key=int)


def fig_sweep_moves(table_path: Path, out: Path) -> Path:
    header, rows = read_tsv(table_path)
    ranges = [row[0] for row in rows]
    fig, ax = plt.subplots(figsize=(6.5, 3.5))
    width = 0.16
    x = np.arange(len(ranges))
    for offset, token in enumerate(MOVE_TOKENS):
        column = header.index(token)
        counts = [int(row[column]) for row in rows]
        ax.bar(x + (offset - 2) * width, counts, width, label=token)
    ax.set_xticks(x, ranges)
    ax.set_xlabel("message range")
    ax.set_ylabel("count")
    ax.set_title("move distribution per range")
    ax.legend(fontsize=7, ncol=5)
    fig.tight_layout()
    return _save(fig, out)


def fig_sweep_progression(table_path: Path, out: Path) -> Path:
    header, rows = read_tsv(table_path)
    ranges = _sorted_ranges(rows)
    ncols = min(3, len(ranges))
    nrows = math.ceil(len(ranges) / ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(3 * ncols, 2.4 * nrows),
                             sharex=True, sharey=True, squeeze=False)
    for index, range_value in enumerate(ranges):
        ax = axes[index // ncols][index % ncols]
        series: dict[str, list[tuple[int, float]]] = defaultdict(list)
        for row in rows:
            if row[0] == range_value:
                series[row[1]].append((int(row[2]), float(row[4])))
        for name, points in sorted(series.items()):
            points.sort()
            xs = [p[0] for p in points]
            ys = [p[1] for p in points]
            if name == "mean":
                ax.plot(xs, ys, color="#c44e52", linewidth=1.8, label="mean")
            else:
                ax.plot(xs, ys, color="#999999", linewidth=0.7, alpha=0.6)
        ax.set_title(f"range {range_value}", fontsize=8)
    for index in range(len(ranges), nrows * ncols):
        axes[index // ncols][index % ncols].set_axis_off()
    fig.suptitle("cumulative unique hashtags (gray = trials)", fontsize=10)
    fig.tight_layout(rect=(0, 0, 1, 0.94))
    return _save(fig, out)


def fig_sweep_lifespans(table_path: Path, out: Path) -> Path:
    header, rows = read_tsv(table_path)
    ranges = _sorted_ranges(rows)
    ncols = min(3, len(ranges))
    nrows = math.ceil(len(ranges) / ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(3 * ncols, 2.4 * nrows),
                             sharex=True, squeeze=False)
    for index, range_value in enumerate(ranges):
        ax = axes[index // ncols][index % ncols]
        pairs = sorted(
            (int(row[1]), int(row[2])) for row in rows
            if row[0] == range_value
        )
        ax.bar([p[0] for p in pairs], [p[1] for p in pairs],
               color="#4c72b0")
        ax.set_title(f"range {range_value}", fontsize=8)
        ax.set_xlabel("lifespan")
    for index in range(len(ranges), nrows * ncols):
        axes[index // ncols][index % ncols].set_axis_off()
    fig.suptitle("hashtag lifespan distribution", fontsize=10)
    fig.tight_layout(rect=(0, 0, 1, 0.94))
    return _save(fig, out)


def fig_sweep_mbti(table_path: Path, out: Path) -> Path:
    header, rows = read_tsv(table_path)
    ranges = _sorted_ranges(rows)
    types = sorted({row[4] for row in rows if row[4]})
    matrix = np.zeros((len(ranges), len(types)))
    for row in rows:
        if row[4]:
            matrix[ranges.index(row[0]), types.index(row[4])] += 1
    fig, ax = plt.subplots(figsize=(0.6 + 0.45 * len(types), 3.2))
    image = ax.imshow(matrix, cmap="Blues", aspect="auto")
    ax.set_xticks(range(len(types)), types, rotation=90, fontsize=7)
    ax.set_yticks(range(len(ranges)), ranges)
    ax.set_ylabel("message range")
    ax.set_title("final questionnaire types per range")
    fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    return _save(fig, out)


def fig_sweep_embeddings(
    sweep_dir: Path,
    out: Path,
    encoder: TextEncoder | None = None,
    seed: int = 0,
) -> Path:
    dumps = message_dumps(sweep_dir)
    if not dumps:
        raise InputError(f"{sweep_dir}: no message dumps")
    ranges = sorted(dumps)
    ncols = min(3, len(ranges))
    nrows = math.ceil(len(ranges) / ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(3 * ncols, 2.6 * nrows),
                             squeeze=False)
    method = ""
    for index, range_value in enumerate(ranges):
        ax = axes[index // ncols][index % ncols]
        rows = sorted(read_message_dump(dumps[range_value]),
                      key=lambda r: (r.trial, r.step, r.agent))
        points, method = embed_texts([r.text for r in rows],
                                     encoder=encoder, seed=seed)
        colors = [_agent_color(r.agent) for r in rows]
        ax.scatter(points[:, 0], points[:, 1], s=6, c=colors)
        ax.set_title(f"range {range_value}", fontsize=8)
    for index in range(len(ranges), nrows * ncols):
        axes[index // ncols][index % ncols].set_axis_off()
    fig.suptitle(f"projected messages per range ({method})", fontsize=10)
    fig.tight_layout(rect=(0, 0, 1, 0.94))
    return _save(fig, out)


def fig_range_trends(
    summary_path: Path,
    diversity_table: tuple[list[str], list[list[object]]],
    out: Path,
) -> Path:
    header, rows = read_tsv(summary_path)
    ranges = [int(row[0]) for row in rows]
    def series(mean_col: str, std_col: str):
        means = [float(row[header.index(mean_col)]) for row in rows]
        stds = [float(row[header.index(std_col)]) for row in rows]
        return means, stds
    panels = [
        ("unique hashtags", *series("unique_hashtags_mean",
                                    "unique_hashtags_std")),
        ("landmark mentions", *series("hallucinations_mean",
                                      "hallucinations_std")),
    ]
    div_header, div_rows = diversity_table
    div_means = {
        int(row[0]): float(row[2]) for row in div_rows if row[1] == "mean"
    }
    div_stds = {
        int(row[0]): float(row[2]) for row in div_rows if row[1] == "std"
    }
    if div_means:
        panels.append((
            "message diversity",
            [div_means.get(r, 0.0) for r in ranges],
            [div_stds.get(r, 0.0) for r in ranges],
        ))
    fig, axes = plt.subplots(len(panels), 1, figsize=(5.5, 2.2 * len(panels)),
                             sharex=True, squeeze=False)
    for ax, (title, means, stds) in zip(axes[:, 0], panels):
        means = np.array(means)
        stds = np.array(stds)
        ax.plot(ranges, means, color="#4c72b0", marker="o")
        ax.fill_between(ranges, means - stds, means + stds, alpha=0.25,
                        color="#4c72b0")
        ax.set_ylabel(title, fontsize=8)
    axes[-1, 0].set_xlabel("message range")
    fig.suptitle("trial means with standard-deviation bands", fontsize=10)
    fig.tight_layout(rect=(0, 0, 1, 0.95))
    return _save(fig, out)


def _write_meta(out_dir: Path, seed: int, encoder_name: str,
                notes: dict) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "render_meta.json"
    payload = {
        "projection_seed": seed,
        "encoder": encoder_name,
        **notes,
    }
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def render_run_figures(
    run_dir: Path | str,
    out_dir: Path | str | None = None,
    encoder: TextEncoder | None = None,
    classifier: EmotionClassifier | None = None,
    seed: int = 0,
) -> RenderReport:
    """Render every run-level figure whose inputs exist."""
    run_dir = Path(run_dir)
    out = Path(out_dir) if out_dir is not None else run_dir / "figures"
    report = RenderReport()
    manifest = read_manifest(run_dir)
    side, _, num_steps = world_shape(manifest)
    metrics = run_dir / "metrics"

    def attempt(name: str, requirements: Sequence[Path],
                render: Callable[[], Path]) -> None:
        missing = [str(p) for p in requirements if not p.exists()]
        if missing:
            report.skipped.append((name, f"missing {', '.join(missing)}"))
            return
        report.written.append(render())

    transcript_path = run_dir / "transcript.jsonl"
    rows = read_transcript(transcript_path) if transcript_path.exists() else []

    attempt("move_distribution", [metrics / "move_distribution.tsv"],
            lambda: fig_move_distribution(
                metrics / "move_distribution.tsv", out / "moves.png"))

    def render_trajectories() -> Path:
        labels = None
        clusters_path = run_dir / "clusters.jsonl"
        if clusters_path.exists():
            steps = read_clusters(clusters_path)
            if steps:
                labels = steps[-1].labels
        return fig_trajectories(rows, side, out / "trajectories.png",
                                final_labels=labels)

    attempt("trajectories", [transcript_path], render_trajectories)
    attempt("stay_timeline", [metrics / "stay_events.tsv"],
            lambda: fig_stay_timeline(
                metrics / "stay_events.tsv", out / "stay_timeline.png"))
    attempt("word_cloud", [metrics / "word_frequencies.tsv"],
            lambda: fig_word_cloud(
                metrics / "word_frequencies.tsv", out / "word_cloud.png",
                seed=seed))
    attempt("hallucination_map",
            [metrics / "hallucinations.tsv", transcript_path],
            lambda: fig_hallucination_map(
                metrics / "hallucinations.tsv", rows, side,
                out / "hallucination_map.png"))
    attempt("hallucination_timeline", [metrics / "hallucinations.tsv"],
            lambda: fig_hallucination_timeline(
                metrics / "hallucinations.tsv", num_steps,
                out / "hallucination_timeline.png"))
    attempt("hashtag_timeline", [metrics / "hashtag_progression.tsv"],
            lambda: fig_hashtag_timeline(
                metrics / "hashtag_progression.tsv",
                out / "hashtag_timeline.png"))
    attempt("emotions", [transcript_path],
            lambda: fig_emotions(rows, out / "emotions.png",
                                 classifier=classifier))

    def render_embeddings() -> Path:
        messages = embed_corpus(rows, "message", encoder=encoder, seed=seed)
        memories = embed_corpus(rows, "memory", encoder=encoder, seed=seed)
        return fig_embeddings(messages, memories, out / "embeddings.png")

    attempt("embeddings", [transcript_path], render_embeddings)
    attempt("mbti_axes", [run_dir / "mbti" / "results.tsv"],
            lambda: fig_mbti_axes(
                run_dir / "mbti" / "results.tsv", out / "mbti_axes.png"))

    sample = embed_corpus(rows[:1], "message", encoder=encoder, seed=seed)
    report.written.append(_write_meta(
        out, seed, sample.encoder,
        {"projection": sample.projection, "kind": "run"},
    ))
    return report


def render_sweep_figures(
    sweep_dir: Path | str,
    out_dir: Path | str | None = None,
    encoder: TextEncoder | None = None,
    seed: int = 0,
) -> RenderReport:
    """Render every sweep-level figure whose inputs exist, plus the
    diversity supplement table."""
    sweep_dir = Path(sweep_dir)
    sweep_runs(sweep_dir)  # validates the layout early
    out = Path(out_dir) if out_dir is not None else sweep_dir / "figures"
    aggregates = sweep_dir / "aggregates"
    report = RenderReport()

    def attempt(name: str, requirements: Sequence[Path],
                render: Callable[[], Path]) -> None:
        missing = [str(p) for p in requirements if not p.exists()]
        if missing:
            report.skipped.append((name, f"missing {', '.join(missing)}"))
            return
        report.written.append(render())

    attempt("sweep_moves", [aggregates / "move_distribution_by_range.tsv"],
            lambda: fig_sweep_moves(
                aggregates / "move_distribution_by_range.tsv",
                out / "sweep_moves.png"))
    attempt("sweep_progression",
            [aggregates / "hashtag_progression_by_range.tsv"],
            lambda: fig_sweep_progression(
                aggregates / "hashtag_progression_by_range.tsv",
                out / "sweep_progression.png"))
    attempt("sweep_lifespans",
            [aggregates / "lifespan_histogram_by_range.tsv"],
            lambda: fig_sweep_lifespans(
                aggregates / "lifespan_histogram_by_range.tsv",
                out / "sweep_lifespans.png"))
    attempt("sweep_mbti", [aggregates / "mbti_types_by_range.tsv"],
            lambda: fig_sweep_mbti(
                aggregates / "mbti_types_by_range.tsv",
                out / "sweep_mbti.png"))

    dumps = message_dumps(sweep_dir)
    if dumps:
        report.written.append(fig_sweep_embeddings(
            sweep_dir, out / "sweep_embeddings.png", encoder=encoder,
            seed=seed))
        diversity_table = diversity_rows(sweep_dir, encoder=encoder,
                                         seed=seed)
        report.written.append(write_tsv(
            out / "diversity_by_range.tsv", *diversity_table,
            comments=(f"projection seed {seed}",),
        ))
    else:
        diversity_table = ([], [])
        report.skipped.append(
            ("sweep_embeddings", f"missing {sweep_dir / 'messages'}"))
        report.skipped.append(
            ("diversity_by_range", f"missing {sweep_dir / 'messages'}"))

    attempt("range_trends", [aggregates / "range_summary.tsv"],
            lambda: fig_range_trends(
                aggregates / "range_summary.tsv", diversity_table,
                out / "range_trends.png"))

    encoder_name = encoder.name if encoder is not None else "hashing-64"
    report.written.append(_write_meta(
        out, seed, encoder_name, {"kind": "sweep"},
    ))
    return report
