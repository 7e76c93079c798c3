"""Offline analytics and figures for simulation run directories.

Reads the transcript, cluster, and metric files a run produces and adds
embeddings, diversity and emotion series, and a full figure suite on top.
The run directories are the only interface to the simulator.
"""

__version__ = "0.1.0"

from .diversity import diversity, diversity_rows, write_diversity_table
from .embedding import (
    EmbeddedCorpus,
    EmbeddedItem,
    HashingEncoder,
    SentenceTransformerEncoder,
    embed_corpus,
    embed_texts,
    project_2d,
    read_corpus,
    write_corpus,
)
from .emotions import (
    CHANNELS,
    EmotionPoint,
    LexiconEmotionClassifier,
    TransformersEmotionClassifier,
    emotion_rows,
    emotion_series,
    series_by_agent,
)
from .errors import InputError, SetupError
from .figures import RenderReport, render_run_figures, render_sweep_figures
from .runio import (
    ClusterStep,
    MessageRow,
    TranscriptRow,
    read_clusters,
    read_manifest,
    read_message_dump,
    read_transcript,
    read_tsv,
    rows_by_agent,
    rows_by_step,
    sweep_runs,
    texts_of,
    world_shape,
    write_tsv,
)

__all__ = [
    "CHANNELS",
    "ClusterStep",
    "EmbeddedCorpus",
    "EmbeddedItem",
    "EmotionPoint",
    "HashingEncoder",
    "InputError",
    "LexiconEmotionClassifier",
    "MessageRow",
    "RenderReport",
    "SentenceTransformerEncoder",
    "SetupError",
    "TranscriptRow",
    "TransformersEmotionClassifier",
    "__version__",
    "diversity",
    "diversity_rows",
    "embed_corpus",
    "embed_texts",
    "emotion_rows",
    "emotion_series",
    "project_2d",
    "read_clusters",
    "read_corpus",
    "read_manifest",
    "read_message_dump",
    "read_transcript",
    "read_tsv",
    "render_run_figures",
    "render_sweep_figures",
    "rows_by_agent",
    "rows_by_step",
    "series_by_agent",
    "sweep_runs",
    "texts_of",
    "world_shape",
    "write_corpus",
    "write_diversity_table",
    "write_tsv",
]
