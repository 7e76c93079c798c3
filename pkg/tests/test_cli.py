from __future__ import annotations

import json

import pytest

from agentfield.cli import main
from agentfield.metrics import read_tsv
from agentfield.runner import read_manifest
from agentfield.transcript import load_transcript

TINY = """
[world]
side_length = 10
num_agents = 3
message_range = 2
num_steps = 4
rng_seed = 11
"""


@pytest.fixture()
def tiny_toml(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(TINY, encoding="utf-8")
    return path


def test_run_subcommand(tmp_path, tiny_toml):
    out = tmp_path / "out"
    assert main(["-q", "run", "--config", str(tiny_toml), "--out", str(out)]) == 0
    assert len(load_transcript(out / "transcript.jsonl")) == 12
    assert read_manifest(out)["status"] == "complete"


def test_run_no_mbti_flag(tmp_path, tiny_toml):
    out = tmp_path / "out"
    code = main([
        "-q", "run", "--config", str(tiny_toml), "--out", str(out), "--no-mbti",
    ])
    assert code == 0
    assert not (out / "mbti").exists()


def test_missing_config_exits_2(tmp_path):
    code = main([
        "-q", "run", "--config", str(tmp_path / "nope.toml"),
        "--out", str(tmp_path / "out"),
    ])
    assert code == 2


def test_bad_config_exits_2(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[world]\nnum_agents = 0\n")
    code = main([
        "-q", "run", "--config", str(bad), "--out", str(tmp_path / "out"),
    ])
    assert code == 2


def test_dead_backend_exits_3(tmp_path):
    config = tmp_path / "remote.toml"
    config.write_text(
        TINY
        + '\n[backend]\nkind = "remote"\nendpoint_url = "http://127.0.0.1:9/v1"\n'
        'model_name = "m"\nmax_retries = 0\nrequest_timeout_s = 2.0\n'
    )
    code = main([
        "-q", "run", "--config", str(config), "--out", str(tmp_path / "out"),
    ])
    assert code == 3
    assert read_manifest(tmp_path / "out")["status"] == "failed"


def test_analyze_recomputes(tmp_path, tiny_toml):
    out = tmp_path / "out"
    main(["-q", "run", "--config", str(tiny_toml), "--out", str(out)])
    before = (out / "metrics" / "move_distribution.tsv").read_bytes()
    (out / "metrics" / "move_distribution.tsv").write_bytes(b"tampered\n")
    assert main(["-q", "analyze", "--run", str(out)]) == 0
    assert (out / "metrics" / "move_distribution.tsv").read_bytes() == before


def test_analyze_missing_run_exits_2(tmp_path):
    assert main(["-q", "analyze", "--run", str(tmp_path / "ghost")]) == 2


def test_mbti_subcommand_with_custom_checkpoints(tmp_path, tiny_toml):
    out = tmp_path / "out"
    main(["-q", "run", "--config", str(tiny_toml), "--out", str(out), "--no-mbti"])
    code = main([
        "-q", "mbti", "--run", str(out), "--checkpoints", "0,2,4",
    ])
    assert code == 0
    header, rows = read_tsv(out / "mbti" / "results.tsv")
    assert len(rows) == 3 * 3  # checkpoints x agents
    checkpoints = {row[1] for row in rows}
    assert checkpoints == {"0", "2", "4"}


def test_mbti_bad_checkpoints_exit_2(tmp_path, tiny_toml):
    out = tmp_path / "out"
    main(["-q", "run", "--config", str(tiny_toml), "--out", str(out)])
    assert main(["-q", "mbti", "--run", str(out), "--checkpoints", "abc"]) == 2


def test_sweep_subcommand(tmp_path):
    config = tmp_path / "sweep.toml"
    config.write_text(
        TINY + "\n[sweep]\nranges = [0, 2]\ntrials = 1\nbase_seed = 2\n"
    )
    out = tmp_path / "sweep"
    assert main(["-q", "sweep", "--config", str(config), "--out", str(out)]) == 0
    manifest = read_manifest(out)
    assert manifest["kind"] == "sweep"
    assert len(manifest["trials"]) == 2
    assert (out / "aggregates" / "range_summary.tsv").exists()


def test_judge_analyze_with_scripted_judge(tmp_path):
    # Script one hallucinated message plus the judge verdict for it.
    script = tmp_path / "script.jsonl"
    entries = [
        {"agent": "agent0", "step": 1, "phase": "message",
         "text": "There is treasure by the cave."},
        {"agent": "agent0", "step": 1, "phase": "judge",
         "text": "cave, treasure"},
    ]
    script.write_text("\n".join(json.dumps(e) for e in entries) + "\n")
    config = tmp_path / "run.toml"
    config.write_text(
        TINY + f'\n[backend]\nscript_path = "{script.name}"\n'
    )
    out = tmp_path / "out"
    assert main(["-q", "run", "--config", str(config), "--out", str(out)]) == 0
    assert main(["-q", "analyze", "--run", str(out), "--judge"]) == 0
    header, rows = read_tsv(out / "metrics" / "hallucinations_judge.tsv")
    judged = {(row[0], row[1], row[2]) for row in rows}
    assert ("1", "0", "cave") in judged
    assert ("1", "0", "treasure") in judged


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert "agentfield" in capsys.readouterr().out
