"""Text embeddings and 2D projection for transcript corpora.

The default encoder is a deterministic feature hasher, so the whole
pipeline runs offline. A sentence-transformer encoder with the same
interface is available when the optional dependency is installed.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import InputError, SetupError
from .runio import TranscriptRow

_TOKEN_RE = re.compile(r"[a-z0-9#']+")

TEXT_KINDS = ("message", "memory")


class TextEncoder(Protocol):
    """Maps a batch of texts to fixed-dimension vectors."""

    @property
    def name(self) -> str: ...

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


class HashingEncoder:
    """Signed bag-of-words folded into a fixed dimension by hashing.

    Deterministic across processes and platforms: token placement and
    sign come from sha256, never from Python's randomized hash().
    """

    def __init__(self, dim: int = 64):
        if dim < 2:
            raise ValueError("dim must be at least 2")
        self.dim = dim

    @property
    def name(self) -> str:
        return f"hashing-{self.dim}"

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            for token in _TOKEN_RE.findall(text.lower()):
                digest = hashlib.sha256(token.encode("utf-8")).digest()
                index = int.from_bytes(digest[:4], "big") % self.dim
                sign = 1.0 if digest[4] % 2 == 0 else -1.0
                out[i, index] += sign
            norm = np.linalg.norm(out[i])
            if norm > 0:  # empty or fully cancelled text stays a zero vector
                out[i] /= norm
        return out


class SentenceTransformerEncoder:
    """Optional dense sentence encoder; needs the models extra."""

    def __init__(self, model_name: str = "all-MiniLM-L6-v2"):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise SetupError(
                "sentence-transformers is not installed; "
                "pip install 'fieldlens[models]'"
            ) from exc
        self._model = SentenceTransformer(model_name)
        self._model_name = model_name

    @property
    def name(self) -> str:
        return f"sentence-transformer:{self._model_name}"

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(self._model.encode(list(texts)))


def project_2d(vectors: np.ndarray, seed: int = 0) -> tuple[np.ndarray, str]:
    """Project vectors to 2D; returns (points, method descriptor).

    Uses UMAP when installed, else PCA. The descriptor records which
    method ran and with what seed, so a rerun can be matched exactly.
    """
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2:
        raise ValueError("expected a 2D array of row vectors")
    n = vectors.shape[0]
    if n == 0:
        return np.zeros((0, 2)), f"none(seed={seed})"
    try:
        import umap

        reducer = umap.UMAP(n_components=2, random_state=seed)
        return np.asarray(reducer.fit_transform(vectors)), f"umap(seed={seed})"
    except ImportError:
        pass
    from sklearn.decomposition import PCA

    components = min(2, n, vectors.shape[1])
    points = np.zeros((n, 2))
    if components >= 1 and n >= 2:
        reducer = PCA(n_components=components, svd_solver="full",
                      random_state=seed)
        points[:, :components] = reducer.fit_transform(vectors)
    return points, f"pca(seed={seed})"


@dataclass(frozen=True)
class EmbeddedItem:
    agent: int
    step: int
    kind: str
    vector: tuple[float, ...]
    point2d: tuple[float, float]


@dataclass(frozen=True)
class EmbeddedCorpus:
    items: tuple[EmbeddedItem, ...]
    encoder: str
    projection: str

    def __post_init__(self):
        dims = {len(item.vector) for item in self.items}
        if len(dims) > 1:
            raise ValueError(f"mixed vector dimensions: {sorted(dims)}")
        kinds = {item.kind for item in self.items}
        if not kinds <= set(TEXT_KINDS):
            raise ValueError(f"unknown text kinds: {sorted(kinds)}")

    @property
    def points(self) -> np.ndarray:
        return np.array([item.point2d for item in self.items]).reshape(-1, 2)

    @property
    def agents(self) -> list[int]:
        return sorted({item.agent for item in self.items})


def embed_corpus(
    rows: Iterable[TranscriptRow],
    kind: str,
    encoder: TextEncoder | None = None,
    seed: int = 0,
) -> EmbeddedCorpus:
    """One vector and one 2D point per (agent, step) text of the kind."""
    if kind not in TEXT_KINDS:
        raise ValueError(f"unknown text kind: {kind!r}")
    encoder = encoder or HashingEncoder()
    rows = sorted(rows, key=lambda r: (r.step, r.agent))
    texts = [getattr(row, kind) for row in rows]
    vectors = encoder.encode(texts)
    points, method = project_2d(vectors, seed=seed)
    items = tuple(
        EmbeddedItem(
            agent=row.agent, step=row.step, kind=kind,
            vector=tuple(float(v) for v in vectors[i]),
            point2d=(float(points[i, 0]), float(points[i, 1])),
        )
        for i, row in enumerate(rows)
    )
    return EmbeddedCorpus(items=items, encoder=encoder.name,
                          projection=method)


def embed_texts(
    texts: Sequence[str],
    encoder: TextEncoder | None = None,
    seed: int = 0,
) -> tuple[np.ndarray, str]:
    """Encode and project loose texts; returns (points2d, method)."""
    encoder = encoder or HashingEncoder()
    return project_2d(encoder.encode(texts), seed=seed)


def write_corpus(corpus: EmbeddedCorpus, path: Path | str) -> Path:
    """JSONL: a metadata line, then one line per embedded item."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        handle.write(json.dumps({
            "encoder": corpus.encoder, "projection": corpus.projection,
            "items": len(corpus.items),
        }) + "\n")
        for item in corpus.items:
            handle.write(json.dumps({
                "agent": item.agent, "step": item.step, "kind": item.kind,
                "vector": list(item.vector), "point2d": list(item.point2d),
            }) + "\n")
    return path


def read_corpus(path: Path | str) -> EmbeddedCorpus:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no corpus at {path}")
    with path.open(encoding="utf-8") as handle:
        lines = [line for line in handle if line.strip()]
    if not lines:
        raise InputError(f"{path}: empty corpus file")
    try:
        meta = json.loads(lines[0])
        items = tuple(
            EmbeddedItem(
                agent=data["agent"], step=data["step"], kind=data["kind"],
                vector=tuple(data["vector"]),
                point2d=(data["point2d"][0], data["point2d"][1]),
            )
            for data in map(json.loads, lines[1:])
        )
        return EmbeddedCorpus(
            items=items, encoder=meta["encoder"],
            projection=meta["projection"],
        )
    except (json.JSONDecodeError, KeyError, TypeError, IndexError) as exc:
        raise InputError(f"{path}: bad corpus file") from exc
