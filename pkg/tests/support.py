"""Test helpers shared across modules by direct import."""

from __future__ import annotations

from agentfield.backends import CallKey, GenerationParams, ScriptedBackend


class PromptRecorder:
    """Backend wrapper that keeps every (key, prompt) pair it served."""

    def __init__(self, inner=None):
        self.inner = inner or ScriptedBackend()
        self.calls: list[tuple[CallKey | None, str]] = []

    def generate(self, prompt: str, params: GenerationParams, key=None) -> str:
        self.calls.append((key, prompt))
        return self.inner.generate(prompt, params, key=key)

    def descriptor(self) -> dict:
        return self.inner.descriptor()

    def prompt_for(self, agent: str, step: int, phase: str) -> str:
        for key, prompt in self.calls:
            if key is not None and (key.agent, key.step, key.phase) == (
                agent, step, phase,
            ):
                return prompt
        raise KeyError((agent, step, phase))
