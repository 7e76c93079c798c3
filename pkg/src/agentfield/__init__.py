"""Grid-world society of message-passing language-model agents.

Agents live on a torus, exchange free-text messages with everyone in range,
fold what they hear into a running memory, and decide their own moves. The
package runs such societies against a remote chat-completion endpoint or a
deterministic scripted backend, and measures what emerges: spatial clusters,
hashtag spread, invented landmarks, movement bias, and personality drift.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .backends import (
    CallKey,
    GenerationParams,
    RemoteBackend,
    ScriptedBackend,
    fallback_text,
    load_script,
)
from .clustering import NOISE, StepClusters, cluster_timeline, dbscan_labels
from .config import RunConfig, load_config
from .engine import EngineSettings, Simulation
from .errors import (
    BackendUnavailableError,
    ConfigError,
    ProtocolError,
    ScriptError,
    TemplateError,
    TranscriptError,
)
from .moves import parse_move
from .prompts import NO_MESSAGES, PromptTemplate, TemplateSet, load_templates
from .transcript import StepRecord, load_transcript, read_transcript
from .world import (
    NO_MEMORY,
    AgentState,
    Message,
    MoveCommand,
    Position,
    WorldConfig,
    apply_move,
    neighbors_within,
    torus_chebyshev,
)

__all__ = [
    "AgentState",
    "BackendUnavailableError",
    "CallKey",
    "ConfigError",
    "EngineSettings",
    "GenerationParams",
    "Message",
    "MoveCommand",
    "NOISE",
    "NO_MEMORY",
    "NO_MESSAGES",
    "Position",
    "PromptTemplate",
    "ProtocolError",
    "RemoteBackend",
    "RunConfig",
    "ScriptError",
    "ScriptedBackend",
    "Simulation",
    "StepClusters",
    "StepRecord",
    "TemplateError",
    "TemplateSet",
    "TranscriptError",
    "WorldConfig",
    "apply_move",
    "cluster_timeline",
    "dbscan_labels",
    "fallback_text",
    "load_config",
    "load_script",
    "load_templates",
    "load_transcript",
    "neighbors_within",
    "parse_move",
    "read_transcript",
    "torus_chebyshev",
    "__version__",
]
