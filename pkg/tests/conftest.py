"""Shared fixtures plus a per-criterion summary for the acceptance suite."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from agentfield.config import RunConfig
from agentfield.prompts import load_templates
from agentfield.world import WorldConfig

from support import PromptRecorder


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(id, text): acceptance criterion covered by this test",
    )
    config._criterion_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.skipped):
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        item.config._criterion_results.append(
            (marker.args[0], marker.args[1], status)
        )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_criterion_results", [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for cid, text, status in sorted(results):
        terminalreporter.write_line(f"[{status}] {cid}: {text}")


@pytest.fixture()
def templates():
    return load_templates()


@pytest.fixture()
def tiny_config():
    """3 agents on a 10x10 torus for fast end-to-end runs."""
    return RunConfig(
        world=WorldConfig(
            side_length=10, num_agents=3, message_range=2, num_steps=4,
            rng_seed=11,
        )
    )


def make_script(path: Path, entries: list[dict]) -> Path:
    with path.open("w", encoding="utf-8") as handle:
        for entry in entries:
            handle.write(json.dumps(entry) + "\n")
    return path


@pytest.fixture()
def script_file(tmp_path):
    def build(entries: list[dict], name: str = "script.jsonl") -> Path:
        return make_script(tmp_path / name, entries)

    return build


@pytest.fixture()
def recorder():
    return PromptRecorder
