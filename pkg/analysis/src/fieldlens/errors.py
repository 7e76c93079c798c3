"""Failure types for the analysis pipeline."""


class InputError(Exception):
    """A run or sweep artifact is missing or malformed."""


class SetupError(Exception):
    """An optional model dependency is not installed."""
