"""Encoder determinism, projection behavior, corpus round-trips."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fieldlens.embedding import (
    EmbeddedCorpus,
    EmbeddedItem,
    HashingEncoder,
    embed_corpus,
    embed_texts,
    project_2d,
    read_corpus,
    write_corpus,
)
from fieldlens.errors import InputError
from fieldlens.runio import read_transcript


def test_identical_texts_identical_vectors():
    encoder = HashingEncoder()
    vectors = encoder.encode(["the cave was empty", "the cave was empty"])
    assert np.array_equal(vectors[0], vectors[1])


def test_shape_and_norm():
    encoder = HashingEncoder(dim=32)
    vectors = encoder.encode(["hello world", "", "one"])
    assert vectors.shape == (3, 32)
    assert abs(np.linalg.norm(vectors[0]) - 1.0) < 1e-12
    assert np.array_equal(vectors[1], np.zeros(32))  # empty text


def test_word_order_is_ignored():
    encoder = HashingEncoder()
    a, b = encoder.encode(["north of the hill", "the hill of north"])
    assert np.allclose(a, b)


def test_different_texts_differ():
    encoder = HashingEncoder()
    a, b = encoder.encode(["wander east", "gather west"])
    assert not np.allclose(a, b)


def test_dim_validation():
    with pytest.raises(ValueError):
        HashingEncoder(dim=1)


@given(st.text(max_size=200))
def test_encode_never_crashes_and_is_bounded(text):
    vectors = HashingEncoder(dim=16).encode([text])
    assert vectors.shape == (1, 16)
    assert np.linalg.norm(vectors[0]) <= 1.0 + 1e-9


def test_project_2d_deterministic():
    rng = np.random.default_rng(1)
    vectors = rng.normal(size=(30, 8))
    points_a, method_a = project_2d(vectors, seed=5)
    points_b, method_b = project_2d(vectors, seed=5)
    assert np.array_equal(points_a, points_b)
    assert method_a == method_b
    assert "seed=5" in method_a
    assert method_a.split("(")[0] in ("pca", "umap")


def test_project_2d_edge_sizes():
    points, method = project_2d(np.zeros((0, 4)), seed=0)
    assert points.shape == (0, 2)
    points, _ = project_2d(np.ones((1, 4)), seed=0)
    assert np.array_equal(points, np.zeros((1, 2)))
    points, _ = project_2d(np.array([[1.0], [3.0]]), seed=0)
    assert points.shape == (2, 2)
    assert np.allclose(points[:, 1], 0.0)  # 1D input spans one component


def test_project_2d_rejects_flat_input():
    with pytest.raises(ValueError):
        project_2d(np.zeros(5))


def test_separable_topics_stay_separable():
    """Three word-disjoint topic groups keep positive silhouette in 2D."""
    from sklearn.metrics import silhouette_score

    topics = {
        0: ["river water flows downstream", "cold river water", "deep water"],
        1: ["market trade coins barter", "coins for the market", "trade fair"],
        2: ["stars night sky glow", "night sky stars", "glowing stars above"],
    }
    texts, labels = [], []
    for label, sentences in topics.items():
        for sentence in sentences * 4:
            texts.append(sentence)
            labels.append(label)
    points, _ = embed_texts(texts, seed=0)
    assert silhouette_score(points, labels) > 0


def test_embed_corpus_from_run(demo_run):
    rows = read_transcript(demo_run / "transcript.jsonl")
    corpus = embed_corpus(rows, "message", seed=3)
    assert len(corpus.items) == len(rows)
    assert corpus.encoder == "hashing-64"
    assert "seed=3" in corpus.projection
    assert {item.kind for item in corpus.items} == {"message"}
    assert corpus.points.shape == (len(rows), 2)
    assert corpus.agents == list(range(6))


def test_embed_corpus_rejects_unknown_kind(demo_run):
    rows = read_transcript(demo_run / "transcript.jsonl")[:3]
    with pytest.raises(ValueError):
        embed_corpus(rows, "inbox")


def test_corpus_validates_dimensions():
    items = (
        EmbeddedItem(0, 1, "message", (1.0, 0.0), (0.0, 0.0)),
        EmbeddedItem(1, 1, "message", (1.0,), (0.0, 0.0)),
    )
    with pytest.raises(ValueError, match="dimensions"):
        EmbeddedCorpus(items=items, encoder="x", projection="y")


def test_corpus_roundtrip(tmp_path, demo_run):
    rows = read_transcript(demo_run / "transcript.jsonl")[:12]
    corpus = embed_corpus(rows, "memory", seed=1)
    path = write_corpus(corpus, tmp_path / "corpus.jsonl")
    loaded = read_corpus(path)
    assert loaded == corpus


def test_read_corpus_errors(tmp_path):
    with pytest.raises(InputError):
        read_corpus(tmp_path / "absent.jsonl")
    empty = tmp_path / "empty.jsonl"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(InputError, match="empty"):
        read_corpus(empty)
    broken = tmp_path / "broken.jsonl"
    broken.write_text('{"encoder": "x"}\n', encoding="utf-8")
    with pytest.raises(InputError, match="bad corpus"):
        read_corpus(broken)
