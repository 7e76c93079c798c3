"""Command-line entry point.

Subcommands: run one simulation, sweep a grid of reception ranges, recompute
analysis artifacts for a finished run, and re-administer the questionnaire.
Exit codes: 0 success, 1 data errors, 2 bad config or templates, 3 backend
unavailable.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import MbtiSettings, config_from_snapshot, load_config
from .errors import BackendUnavailableError, ConfigError, TranscriptError
from .prompts import load_templates
from .runner import (
    analyze_run,
    read_manifest,
    run_mbti_checkpoints,
    run_one,
    run_sweep,
)
from .transcript import load_transcript

log = logging.getLogger("agentfield.cli")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agentfield",
        description="Simulate a society of message-passing agents on a grid "
        "and measure what emerges.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    parser.add_argument(
        "-q", "--quiet", action="store_true", help="suppress progress output"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one simulation into a directory")
    run_p.add_argument("--config", required=True, help="TOML config file")
    run_p.add_argument("--out", required=True, help="fresh output directory")
    run_p.add_argument(
        "--script", default=None,
        help="override backend.script_path for this run",
    )
    run_p.add_argument(
        "--no-mbti", action="store_true",
        help="skip the questionnaire checkpoints",
    )

    sweep_p = sub.add_parser(
        "sweep", help="run every (range, trial) cell and aggregate"
    )
    sweep_p.add_argument("--config", required=True, help="TOML config file")
    sweep_p.add_argument("--out", required=True, help="fresh output directory")
    sweep_p.add_argument(
        "--jobs", type=int, default=1, help="trials to run in parallel"
    )

    analyze_p = sub.add_parser(
        "analyze", help="recompute clusters and metrics from a transcript"
    )
    analyze_p.add_argument("--run", required=True, help="existing run directory")
    analyze_p.add_argument(
        "--judge", action="store_true",
        help="also score hallucinations with the run's backend as judge",
    )

    mbti_p = sub.add_parser(
        "mbti", help="administer the questionnaire at transcript checkpoints"
    )
    mbti_p.add_argument("--run", required=True, help="existing run directory")
    mbti_p.add_argument(
        "--checkpoints", default=None,
        help="comma-separated step numbers (default: run's configured ones)",
    )
    mbti_p.add_argument(
        "--bank", default=None, help="question bank JSONL (default: run's)"
    )
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    result = run_one(
        config,
        args.out,
        script_path_override=args.script,
        with_mbti=not args.no_mbti,
    )
    log.info(
        "run complete: %d steps, %d agents -> %s",
        config.world.num_steps, config.world.num_agents, result.run_dir,
    )
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    outcomes = run_sweep(
        config,
        args.out,
        jobs=args.jobs,
        on_trial=lambda o: log.info(
            "range %d trial %d: %s", o.range_value, o.trial_index, o.status
        ),
    )
    failed = [o for o in outcomes if o.status != "complete"]
    log.info(
        "sweep complete: %d/%d trials ok -> %s",
        len(outcomes) - len(failed), len(outcomes), args.out,
    )
    if failed:
        for o in failed:
            log.error(
                "range %d trial %d failed: %s", o.range_value, o.trial_index,
                o.error,
            )
        return 3
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    judge_backend = None
    if args.judge:
        manifest = read_manifest(args.run)
        config = config_from_snapshot(manifest.get("config", {}))
        judge_backend = config.backend.build()
    analyze_run(args.run, judge_backend=judge_backend)
    log.info("analysis artifacts rewritten under %s", args.run)
    return 0


def _cmd_mbti(args: argparse.Namespace) -> int:
    run_dir = Path(args.run)
    manifest = read_manifest(run_dir)
    config = config_from_snapshot(manifest.get("config", {}))
    if args.bank is not None:
        config = replace(
            config,
            mbti=MbtiSettings(
                question_bank=args.bank, checkpoints=config.mbti.checkpoints
            ),
        )
    checkpoints = None
    if args.checkpoints is not None:
        try:
            checkpoints = tuple(
                int(piece) for piece in args.checkpoints.split(",") if piece
            )
        except ValueError as exc:
            raise ConfigError(f"--checkpoints: {exc}") from exc
        if not checkpoints:
            raise ConfigError("--checkpoints: no step numbers given")
    templates = load_templates(config.templates_dir)
    backend = config.backend.build()
    records = load_transcript(run_dir / "transcript.jsonl")
    results = run_mbti_checkpoints(
        run_dir, records, config, backend, templates, checkpoints=checkpoints
    )
    for result in results:
        log.info(
            "%s @ step %d: %s", result.agent, result.checkpoint_step,
            result.code,
        )
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(message)s",
        stream=sys.stderr,
    )
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "analyze": _cmd_analyze,
        "mbti": _cmd_mbti,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except BackendUnavailableError as exc:
        log.error("backend unavailable: %s", exc)
        return 3
    except TranscriptError as exc:
        log.error("data error: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
