"""Text-generation backends: a remote chat-completion client and a scripted mock.

Both kinds are stateless across calls: nothing carries over between phases or
steps except what the caller embeds in the prompt.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import requests

from .errors import BackendUnavailableError, ProtocolError, ScriptError

log = logging.getLogger("agentfield.backends")

AUTH_TOKEN_ENV = "AGENTFIELD_API_TOKEN"

PHASES = ("message", "memory", "move", "mbti", "judge")


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.7
    max_tokens: int = 256
    top_p: float = 0.95
    top_k: int = 40

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not (0 < self.top_p <= 1):
            raise ValueError("top_p must be in (0, 1]")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass(frozen=True)
class CallKey:
    """Identifies one logical generation call: which agent, step, and phase."""

    agent: str
    step: int
    phase: str


class TextBackend(Protocol):
    def generate(
        self, prompt: str, params: GenerationParams, key: CallKey | None = None
    ) -> str: ...

    def descriptor(self) -> dict: ...


ScriptTable = dict[tuple[str, int, str], str]


def load_script(path: str | Path) -> ScriptTable:
    """Load a scripted-response table from a line-delimited JSON file.

    Each record is an object {agent, step, phase, text}. Unknown keys are
    allowed at generate() time (the fallback applies); duplicate keys in the
    file are an error because the script would be ambiguous.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScriptError(f"cannot read script file {path}: {exc}") from exc
    table: ScriptTable = {}
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScriptError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise ScriptError(f"{path}:{lineno}: record must be an object")
        try:
            key = (str(record["agent"]), int(record["step"]), str(record["phase"]))
            text = str(record["text"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ScriptError(
                f"{path}:{lineno}: record needs agent, step, phase, text fields"
            ) from exc
        if key[2] not in PHASES:
            raise ScriptError(
                f"{path}:{lineno}: unknown phase {key[2]!r} (expected one of {PHASES})"
            )
        if key in table:
            raise ScriptError(f"{path}:{lineno}: duplicate script key {key}")
        table[key] = text
    return table


# Word pools for fallback text. Kept clear of move-command tokens and of the
# default environment-word list so unscripted runs stay measurable: moves come
# only from the dedicated move sentence, hallucination words only from the
# dedicated wonder sentence.
_FALLBACK_WORDS = (
    "field", "friend", "walk", "quiet", "signal", "echo", "plan", "corner",
    "light", "map", "meet", "wander", "story", "wind", "morning", "voice",
)
_FALLBACK_TAGS = ("together", "explore", "meetup", "roam", "signals", "friends")
_FALLBACK_WONDER = ("cave", "hill", "treasure", "trees")
# Biased toward the positive axes, with stay in between; mirrors the kind of
# skew a real model shows so demo metrics are not uniform noise.
_FALLBACK_MOVES = (
    "x+1", "x+1", "x+1", "x+1",
    "y+1", "y+1", "y+1", "y+1",
    "stay", "stay", "stay",
    "x-1", "y-1",
)


def fallback_text(prompt: str, seed: int) -> str:
    """Deterministic templated stand-in for a model completion.

    A pure function of (prompt bytes, seed): stable across runs, machines, and
    call order. Always embeds one parseable move token; sometimes a hashtag or
    an environment word, so unscripted demo runs produce nonempty metrics.
    """
    digest = hashlib.sha256(f"{seed}\n{prompt}".encode("utf-8")).digest()
    if "\nA. " in prompt and "\nB. " in prompt:
        # Forced-choice questionnaire: pick a side instead of chatting.
        return "A" if digest[8] % 2 == 0 else "B"
    w = _FALLBACK_WORDS
    first = w[digest[0] % len(w)]
    second = w[digest[1] % len(w)]
    third = w[digest[2] % len(w)]
    parts = [f"The {first} and the {second} make me think of the {third}."]
    if digest[3] < 96:
        parts.append(f"#{_FALLBACK_TAGS[digest[4] % len(_FALLBACK_TAGS)]}")
    if digest[5] < 40:
        parts.append(f"I keep wondering about the {_FALLBACK_WONDER[digest[6] % len(_FALLBACK_WONDER)]} here.")
    parts.append(f"Next I will go {_FALLBACK_MOVES[digest[7] % len(_FALLBACK_MOVES)]}.")
    return " ".join(parts)


class ScriptedBackend:
    """Deterministic backend: table lookup by (agent, step, phase), else fallback.

    Referentially transparent, so concurrent calls are safe and per-phase
    scheduling order cannot change any output.
    """

    kind = "scripted"

    def __init__(self, table: ScriptTable | None = None, fallback_seed: int = 0,
                 script_path: str | None = None):
        self.table = dict(table) if table else {}
        self.fallback_seed = fallback_seed
        self.script_path = script_path

    @classmethod
    def from_file(cls, path: str | Path | None, fallback_seed: int = 0) -> "ScriptedBackend":
        if path is None:
            return cls(table={}, fallback_seed=fallback_seed)
        return cls(table=load_script(path), fallback_seed=fallback_seed,
                   script_path=str(path))

    def generate(
        self, prompt: str, params: GenerationParams, key: CallKey | None = None
    ) -> str:
        if not prompt:
            raise ValueError("prompt must be nonempty")
        if key is not None:
            hit = self.table.get((key.agent, key.step, key.phase))
            if hit is not None:
                return hit
        return fallback_text(prompt, self.fallback_seed)

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "script_path": self.script_path,
            "script_entries": len(self.table),
            "fallback_seed": self.fallback_seed,
        }


_RETRYABLE_EXCS = (requests.ConnectionError, requests.Timeout)


class RemoteBackend:
    """Client for an OpenAI-style chat-completion endpoint.

    Sends the rendered prompt verbatim as a single user message. top_k rides
    along as a vendor extension; if the endpoint rejects it by name, it is
    dropped for the rest of the session (logged once).
    """

    kind = "remote"

    def __init__(
        self,
        endpoint_url: str,
        model_name: str,
        request_timeout_s: float = 60.0,
        max_retries: int = 3,
        include_top_k: bool = True,
        backoff_base_s: float = 1.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.url = self._completions_url(endpoint_url)
        self.model_name = model_name
        self.request_timeout_s = request_timeout_s
        self.max_retries = max_retries
        self.include_top_k = include_top_k
        self.backoff_base_s = backoff_base_s
        self._sleep = sleep
        self._top_k_dropped = False

    @staticmethod
    def _completions_url(endpoint_url: str) -> str:
        stripped = endpoint_url.rstrip("/")
        if stripped.endswith("/chat/completions"):
            return stripped
        if stripped.endswith("/v1"):
            return stripped + "/chat/completions"
        return stripped

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(AUTH_TOKEN_ENV)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _body(self, prompt: str, params: GenerationParams) -> dict:
        body = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
        }
        if self.include_top_k and not self._top_k_dropped:
            body["top_k"] = params.top_k
        return body

    def generate(
        self, prompt: str, params: GenerationParams, key: CallKey | None = None
    ) -> str:
        if not prompt:
            raise ValueError("prompt must be nonempty")
        attempts = 1 + self.max_retries
        last_error = "no attempt made"
        attempt = 0
        while attempt < attempts:
            try:
                response = requests.post(
                    self.url,
                    headers=self._headers(),
                    json=self._body(prompt, params),
                    timeout=self.request_timeout_s,
                )
            except _RETRYABLE_EXCS as exc:
                last_error = f"transport error: {exc}"
            else:
                if response.status_code == 200:
                    return self._extract(response)
                body_text = response.text[:2000]
                if (
                    400 <= response.status_code < 500
                    and not self._top_k_dropped
                    and self.include_top_k
                    and "top_k" in body_text
                ):
                    # Endpoint rejects the vendor extension; drop it and retry
                    # immediately without consuming an attempt.
                    self._top_k_dropped = True
                    log.warning(
                        "endpoint %s rejected top_k; dropping it for this session",
                        self.url,
                    )
                    continue
                last_error = f"HTTP {response.status_code}: {body_text[:200]}"
            attempt += 1
            if attempt < attempts:
                self._sleep(self.backoff_base_s * (2 ** (attempt - 1)))
        raise BackendUnavailableError(
            f"backend at {self.url} failed after {attempts} attempts "
            f"({key.agent}/{key.step}/{key.phase} call): {last_error}"
            if key is not None
            else f"backend at {self.url} failed after {attempts} attempts: {last_error}"
        )

    def _extract(self, response: requests.Response) -> str:
        try:
            data = response.json()
        except ValueError as exc:
            raise ProtocolError(f"response from {self.url} is not JSON: {exc}") from exc
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(
                f"response from {self.url} lacks choices[0].message.content"
            ) from exc
        if not isinstance(content, str):
            raise ProtocolError(f"completion content from {self.url} is not text")
        return content

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "endpoint_url": self.url,
            "model_name": self.model_name,
            "max_retries": self.max_retries,
            "include_top_k": self.include_top_k,
        }
