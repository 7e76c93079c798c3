"""Fixtures that build real run/sweep directories via the simulator CLI,
plus a per-criterion summary for the acceptance tests."""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import pytest

RUN_TOML = """\
[world]
side_length = 12
num_agents = 6
message_range = 3
num_steps = 20
rng_seed = 3

[backend]
kind = "scripted"
fallback_seed = 0

[mbti]
checkpoints = [0, 20]
"""

SWEEP_TOML = """\
[world]
side_length = 10
num_agents = 4
message_range = 2
num_steps = 8
rng_seed = 3

[sweep]
ranges = [0, 2, 4]
trials = 2
base_seed = 5

[mbti]
checkpoints = [0, 8]
"""


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(id, text): acceptance criterion covered by this test",
    )
    config._analysis_criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.skipped):
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        item.config._analysis_criteria.append(
            (marker.args[0], marker.args[1], status)
        )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_analysis_criteria", [])
    if not results:
        return
    terminalreporter.section("analysis acceptance criteria")
    for cid, text, status in sorted(results):
        terminalreporter.write_line(f"[{status}] {cid}: {text}")


def _simulate(args: list[str], cwd: Path) -> None:
    result = subprocess.run(
        [sys.executable, "-m", "agentfield.cli", "-q", *args],
        cwd=cwd, capture_output=True, text=True,
    )
    if result.returncode != 0:
        raise RuntimeError(
            f"simulator CLI failed ({result.returncode}): {result.stderr}"
        )


@pytest.fixture(scope="session")
def demo_run(tmp_path_factory) -> Path:
    """A complete 6-agent, 20-step run made by the simulator CLI."""
    root = tmp_path_factory.mktemp("demo_run")
    config = root / "run.toml"
    config.write_text(RUN_TOML, encoding="utf-8")
    out = root / "run"
    _simulate(["run", "--config", str(config), "--out", str(out)], root)
    return out


@pytest.fixture(scope="session")
def demo_sweep(tmp_path_factory) -> Path:
    """A 3-range x 2-trial sweep made by the simulator CLI."""
    root = tmp_path_factory.mktemp("demo_sweep")
    config = root / "sweep.toml"
    config.write_text(SWEEP_TOML, encoding="utf-8")
    out = root / "sweep"
    _simulate(["sweep", "--config", str(config), "--out", str(out)], root)
    return out
