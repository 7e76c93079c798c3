"""Figure rendering: full sets, partial sets, determinism."""

from __future__ import annotations

import json
import shutil

import matplotlib.pyplot as plt

from fieldlens.figures import render_run_figures, render_sweep_figures

RUN_FIGURES = {
    "moves.png", "trajectories.png", "stay_timeline.png", "word_cloud.png",
    "hallucination_map.png", "hallucination_timeline.png",
    "hashtag_timeline.png", "emotions.png", "embeddings.png",
    "mbti_axes.png", "render_meta.json",
}

SWEEP_FIGURES = {
    "sweep_moves.png", "sweep_progression.png", "sweep_lifespans.png",
    "sweep_mbti.png", "sweep_embeddings.png", "range_trends.png",
    "diversity_by_range.tsv", "render_meta.json",
}


def test_run_figures_complete(demo_run, tmp_path):
    report = render_run_figures(demo_run, out_dir=tmp_path / "figs", seed=1)
    assert report.skipped == []
    assert {p.name for p in report.written} == RUN_FIGURES
    for path in report.written:
        assert path.stat().st_size > 0
    meta = json.loads((tmp_path / "figs" / "render_meta.json").read_text())
    assert meta["projection_seed"] == 1
    assert meta["encoder"] == "hashing-64"
    assert "seed=1" in meta["projection"]


def test_run_figures_are_loadable_images(demo_run, tmp_path):
    report = render_run_figures(demo_run, out_dir=tmp_path / "figs")
    for path in report.written:
        if path.suffix != ".png":
            continue
        image = plt.imread(path)
        assert image.ndim == 3 and image.shape[0] > 50


def test_run_figures_partial_without_metrics(demo_run, tmp_path):
    partial = tmp_path / "partial"
    partial.mkdir()
    for name in ("manifest.json", "transcript.jsonl"):
        shutil.copy(demo_run / name, partial / name)
    report = render_run_figures(partial, out_dir=tmp_path / "figs")
    written = {p.name for p in report.written}
    assert {"trajectories.png", "emotions.png", "embeddings.png",
            "render_meta.json"} <= written
    skipped_names = {name for name, _ in report.skipped}
    assert "move_distribution" in skipped_names
    assert "word_cloud" in skipped_names
    for name, reason in report.skipped:
        assert reason.startswith("missing ")


def test_sweep_figures_complete(demo_sweep, tmp_path):
    report = render_sweep_figures(demo_sweep, out_dir=tmp_path / "figs",
                                  seed=2)
    assert report.skipped == []
    assert {p.name for p in report.written} == SWEEP_FIGURES
    meta = json.loads((tmp_path / "figs" / "render_meta.json").read_text())
    assert meta["projection_seed"] == 2


def test_sweep_figures_without_messages(demo_sweep, tmp_path):
    partial = tmp_path / "partial"
    shutil.copytree(demo_sweep, partial,
                    ignore=shutil.ignore_patterns("messages", "figures"))
    report = render_sweep_figures(partial, out_dir=tmp_path / "figs")
    skipped_names = {name for name, _ in report.skipped}
    assert skipped_names == {"sweep_embeddings", "diversity_by_range"}
    assert {p.name for p in report.written} == (
        SWEEP_FIGURES - {"sweep_embeddings.png", "diversity_by_range.tsv"}
    )


def test_rendering_is_deterministic(demo_run, tmp_path):
    first = render_run_figures(demo_run, out_dir=tmp_path / "a", seed=9)
    second = render_run_figures(demo_run, out_dir=tmp_path / "b", seed=9)
    names = sorted(p.name for p in first.written)
    assert names == sorted(p.name for p in second.written)
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (
            tmp_path / "b" / name).read_bytes(), name
