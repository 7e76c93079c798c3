"""Exception types shared across the package."""

from __future__ import annotations


class ConfigError(Exception):
    """Bad configuration: unusable config file, template, or script. CLI exit code 2."""


class TemplateError(ConfigError):
    """Prompt template missing, unreadable, or containing unknown placeholders."""


class ScriptError(ConfigError):
    """Scripted-backend table file failed to load."""


class BackendUnavailableError(Exception):
    """The generation backend failed after all retries. CLI exit code 3."""


class ProtocolError(BackendUnavailableError):
    """The remote endpoint answered, but the response body was not in the expected shape."""


class TranscriptError(Exception):
    """A transcript file on disk is malformed; the message names the offending line."""
