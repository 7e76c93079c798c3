"""Run orchestration: single runs, questionnaire checkpoints, range sweeps.

A run directory is self-describing: manifest.json records the exact config,
backend, template digests, and artifact list. Every derived file (clusters,
metrics) is a pure function of transcript.jsonl, so an analyze pass over a
finished run reproduces them byte for byte.
"""

from __future__ import annotations

import json
import logging
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .backends import TextBackend
from .clustering import StepClusters, timeline_from_records, write_clusters
from .config import RunConfig, config_from_snapshot
from .engine import EngineSettings, Simulation
from .errors import BackendUnavailableError, ConfigError
from .mbti import (
    AnswerSheet,
    QuestionBank,
    TypeResult,
    administer,
    compare_results,
    result_rows,
    score_sheet,
    snapshot_at,
)
from .metrics import (
    HallucinationScan,
    cluster_lifespan_rows,
    cluster_stats,
    cluster_stats_rows,
    hallucination_rows,
    hashtag_lifespan_rows,
    hashtag_lifespans,
    hashtag_lifespans_by_cluster,
    hashtag_progression,
    hashtag_progression_rows,
    judge_hallucinations,
    move_distribution,
    move_distribution_rows,
    scan_hallucinations,
    stay_event_rows,
    stay_events,
    word_frequencies,
    word_frequency_rows,
    write_tsv,
)
from .prompts import TemplateSet, load_templates
from .transcript import StepRecord, TranscriptWriter, load_transcript
from .world import MOVE_ORDER, WorldConfig

log = logging.getLogger("agentfield.runner")

MANIFEST_SCHEMA_VERSION = 1

# Documented once, stored in every manifest: agents speak from what they heard
# last step, then delivery happens, then memory folds the new inbox in.
INBOX_RULE = (
    "messages generated at step t are written from the step t-1 inbox; "
    "delivery at step t uses pre-move positions; memory update at step t "
    "sees the step t inbox"
)

METRIC_FILES = (
    "move_distribution.tsv",
    "hashtag_progression.tsv",
    "hashtag_lifespans.tsv",
    "hashtag_lifespans_by_cluster.tsv",
    "stay_events.tsv",
    "word_frequencies.tsv",
    "hallucinations.tsv",
    "cluster_stats.tsv",
)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(run_dir: Path, payload: dict) -> None:
    path = run_dir / "manifest.json"
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def read_manifest(run_dir: str | Path) -> dict:
    path = Path(run_dir) / "manifest.json"
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc


def _prepare_dir(out_dir: Path) -> None:
    if out_dir.exists():
        if not out_dir.is_dir() or any(out_dir.iterdir()):
            raise ConfigError(f"output directory {out_dir} exists and is not empty")
    else:
        out_dir.mkdir(parents=True)


def write_analysis(
    run_dir: Path,
    records: Sequence[StepRecord],
    world: WorldConfig,
    judge_scan: HallucinationScan | None = None,
) -> list[StepClusters]:
    """Derive clusters.jsonl and metrics/ from transcript records.

    Deliberately timestamp-free: rerunning this over the same transcript must
    reproduce every byte.
    """
    timeline = timeline_from_records(
        records, eps=world.message_range, side=world.side_length
    )
    write_clusters(run_dir / "clusters.jsonl", timeline)

    metrics_dir = run_dir / "metrics"
    metrics_dir.mkdir(exist_ok=True)

    header, rows = move_distribution_rows(move_distribution(records))
    write_tsv(metrics_dir / "move_distribution.tsv", header, rows)

    header, rows = hashtag_progression_rows(hashtag_progression(records))
    write_tsv(metrics_dir / "hashtag_progression.tsv", header, rows)

    header, rows = hashtag_lifespan_rows(hashtag_lifespans(records))
    write_tsv(metrics_dir / "hashtag_lifespans.tsv", header, rows)

    header, rows = cluster_lifespan_rows(
        hashtag_lifespans_by_cluster(records, timeline)
    )
    write_tsv(metrics_dir / "hashtag_lifespans_by_cluster.tsv", header, rows)

    header, rows = stay_event_rows(stay_events(records, timeline))
    write_tsv(metrics_dir / "stay_events.tsv", header, rows)

    header, rows = word_frequency_rows(
        word_frequencies(r.message for r in records)
    )
    write_tsv(metrics_dir / "word_frequencies.tsv", header, rows)

    scan = scan_hallucinations(records)
    header, rows = hallucination_rows(scan)
    write_tsv(metrics_dir / "hallucinations.tsv", header, rows)

    if judge_scan is not None:
        header, rows = hallucination_rows(judge_scan)
        comments = ["partial: judge backend failed before finishing"] if judge_scan.partial else []
        write_tsv(metrics_dir / "hallucinations_judge.tsv", header, rows,
                  comments=comments)

    header, rows = cluster_stats_rows(cluster_stats(timeline))
    write_tsv(metrics_dir / "cluster_stats.tsv", header, rows)
    return timeline


def run_mbti_checkpoints(
    run_dir: Path,
    records: Sequence[StepRecord],
    config: RunConfig,
    backend: TextBackend,
    templates: TemplateSet,
    checkpoints: Sequence[int] | None = None,
) -> list[TypeResult]:
    """Administer the questionnaire at each checkpoint and write results.

    Raises after writing if any sheet came back incomplete, so a dying
    backend still leaves the collected answers on disk.
    """
    bank = (
        QuestionBank.from_file(config.mbti.question_bank)
        if config.mbti.question_bank
        else QuestionBank.bundled()
    )
    if checkpoints is None:
        checkpoints = config.mbti.resolved_checkpoints(config.world.num_steps)

    sheets: list[AnswerSheet] = []
    results: list[TypeResult] = []
    for checkpoint in checkpoints:
        for agent in snapshot_at(records, checkpoint):
            sheet = administer(
                agent, checkpoint, bank, backend, templates,
                params=config.backend.params,
            )
            sheets.append(sheet)
            results.append(score_sheet(bank, sheet))

    mbti_dir = run_dir / "mbti"
    mbti_dir.mkdir(exist_ok=True)
    with (mbti_dir / "sheets.jsonl").open("w", encoding="utf-8") as handle:
        for sheet in sheets:
            handle.write(sheet.to_json() + "\n")
    header, rows = result_rows(results)
    write_tsv(mbti_dir / "results.tsv", header, rows)

    if len(checkpoints) >= 2:
        first, last = checkpoints[0], checkpoints[-1]
        by_key = {(r.agent, r.checkpoint_step): r for r in results}
        change_rows: list[list[object]] = []
        for result in results:
            if result.checkpoint_step != first:
                continue
            after = by_key.get((result.agent, last))
            if after is None:
                continue
            change = compare_results(result, after)
            change_rows.append(
                [change.agent, first, last, change.before, change.after,
                 ",".join(change.changed_axes)]
            )
        write_tsv(
            mbti_dir / "changes.tsv",
            ["agent", "before_checkpoint", "after_checkpoint",
             "before", "after", "changed_axes"],
            change_rows,
        )

    if any(not sheet.complete for sheet in sheets):
        raise BackendUnavailableError(
            "backend failed during questionnaire; partial sheets were written"
        )
    return results


@dataclass(frozen=True)
class RunResult:
    run_dir: Path
    records: list[StepRecord]
    results: list[TypeResult]


def run_one(
    config: RunConfig,
    out_dir: str | Path,
    script_path_override: str | None = None,
    with_mbti: bool = True,
) -> RunResult:
    """Execute one full run into a fresh directory.

    Config, templates, script, and question bank are all validated before
    anything is written. The transcript flushes after every step, so a crash
    mid-run leaves a readable prefix and a manifest with status "failed".
    """
    out_dir = Path(out_dir)
    templates = load_templates(config.templates_dir)
    backend = config.backend.build(script_path_override=script_path_override)
    bank = (
        QuestionBank.from_file(config.mbti.question_bank)
        if config.mbti.question_bank
        else QuestionBank.bundled()
    )
    checkpoints = config.mbti.resolved_checkpoints(config.world.num_steps)
    if with_mbti and any(c > config.world.num_steps for c in checkpoints):
        raise ConfigError(
            f"mbti.checkpoints {list(checkpoints)} exceed num_steps "
            f"{config.world.num_steps}"
        )

    _prepare_dir(out_dir)
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "kind": "run",
        "package_version": __version__,
        "created_at": _now(),
        "status": "running",
        "config": config.snapshot(),
        "backend": backend.descriptor(),
        "templates": templates.digests(),
        "question_bank_digest": bank.digest(),
        "mbti_checkpoints": list(checkpoints) if with_mbti else [],
        "notes": {"inbox_rule": INBOX_RULE},
        "artifacts": {
            "transcript": "transcript.jsonl",
            "clusters": "clusters.jsonl",
            "metrics": [f"metrics/{name}" for name in METRIC_FILES],
            "mbti": ["mbti/sheets.jsonl", "mbti/results.tsv", "mbti/changes.tsv"]
            if with_mbti
            else [],
        },
    }
    _write_manifest(out_dir, manifest)

    simulation = Simulation(
        config.world,
        backend,
        templates,
        settings=EngineSettings(
            params=config.backend.params, max_workers=config.backend.max_workers
        ),
    )
    records: list[StepRecord] = []
    try:
        with TranscriptWriter(out_dir / "transcript.jsonl") as writer:
            records = simulation.run(on_step=writer.write_step)
    except BackendUnavailableError as exc:
        manifest.update(status="failed", error=str(exc), finished_at=_now())
        _write_manifest(out_dir, manifest)
        raise

    write_analysis(out_dir, records, config.world)

    results: list[TypeResult] = []
    if with_mbti:
        try:
            results = run_mbti_checkpoints(
                out_dir, records, config, backend, templates,
                checkpoints=checkpoints,
            )
        except BackendUnavailableError as exc:
            manifest.update(status="failed", error=str(exc), finished_at=_now())
            _write_manifest(out_dir, manifest)
            raise

    manifest.update(status="complete", finished_at=_now())
    _write_manifest(out_dir, manifest)
    return RunResult(run_dir=out_dir, records=records, results=results)


def analyze_run(
    run_dir: str | Path,
    judge_backend: TextBackend | None = None,
) -> None:
    """Recompute clusters and metrics for an existing run from its transcript."""
    run_dir = Path(run_dir)
    manifest = read_manifest(run_dir)
    config = config_from_snapshot(manifest.get("config", {}))
    world = config.world
    records = load_transcript(run_dir / "transcript.jsonl")
    judge_scan = None
    if judge_backend is not None:
        judge_scan = judge_hallucinations(records, judge_backend)
    write_analysis(run_dir, records, world, judge_scan=judge_scan)


def _script_for_trial(
    template: str | None, range_value: int, trial_index: int
) -> str | None:
    """Per-trial script path: {range} and {trial} expand to the grid cell."""
    if template is None:
        return None
    return template.replace("{range}", str(range_value)).replace(
        "{trial}", str(trial_index)
    )


@dataclass(frozen=True)
class TrialOutcome:
    range_value: int
    trial_index: int
    seed: int
    path: str
    status: str
    error: str = ""


def _trial_stats(result: RunResult, world: WorldConfig) -> dict:
    records = result.records
    timeline = timeline_from_records(
        records, eps=world.message_range, side=world.side_length
    )
    moves = move_distribution(records)
    progression = hashtag_progression(records)
    stays = stay_events(records, timeline)
    return {
        "moves": {cmd.value: moves[cmd] for cmd in MOVE_ORDER},
        "unique_hashtags": progression[-1].cumulative if progression else 0,
        "hallucinations": scan_hallucinations(records).total(),
        "stay_count": len(stays),
        "stay_in_cluster": sum(1 for e in stays if e.in_cluster),
        "parse_failures": sum(1 for r in records if not r.parse_ok),
        "progression": [(p.step, p.active, p.cumulative) for p in progression],
        "lifespans": [l.max_run for l in hashtag_lifespans(records)],
        "types": {
            (r.agent, r.checkpoint_step): r.code for r in result.results
        },
        "checkpoints": sorted({r.checkpoint_step for r in result.results}),
    }


def run_sweep(
    config: RunConfig,
    out_dir: str | Path,
    jobs: int = 1,
    on_trial: Callable[[TrialOutcome], None] | None = None,
) -> list[TrialOutcome]:
    """Run the full range x trial grid and write cross-trial aggregates.

    Each trial gets its own seed and run directory. A failed trial is
    recorded and skipped by the aggregates; the sweep carries on.
    """
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    out_dir = Path(out_dir)
    # Validate shared inputs once before creating anything.
    load_templates(config.templates_dir)
    for r in config.sweep.ranges:
        WorldConfig(
            side_length=config.world.side_length,
            num_agents=config.world.num_agents,
            message_range=r,
            num_steps=config.world.num_steps,
            rng_seed=0,
        )
    _prepare_dir(out_dir)

    grid = [
        (range_index, range_value, trial_index)
        for range_index, range_value in enumerate(config.sweep.ranges)
        for trial_index in range(config.sweep.trials)
    ]

    def run_trial(cell: tuple[int, int, int]) -> tuple[TrialOutcome, dict | None]:
        range_index, range_value, trial_index = cell
        seed = config.sweep.trial_seed(range_index, trial_index)
        trial_dir = out_dir / f"range_{range_value:02d}" / f"trial_{trial_index:02d}"
        trial_config = replace(
            config,
            world=replace(
                config.world, message_range=range_value, rng_seed=seed
            ),
        )
        script = _script_for_trial(
            config.backend.script_path, range_value, trial_index
        )
        outcome_base = dict(
            range_value=range_value,
            trial_index=trial_index,
            seed=seed,
            path=str(trial_dir.relative_to(out_dir)),
        )
        try:
            result = run_one(
                trial_config, trial_dir, script_path_override=script
            )
        except BackendUnavailableError as exc:
            return TrialOutcome(**outcome_base, status="failed", error=str(exc)), None
        stats = _trial_stats(result, trial_config.world)
        stats["messages"] = [
            {
                "range": range_value,
                "trial": trial_index,
                "step": r.step,
                "agent": r.agent,
                "text": r.message,
            }
            for r in result.records
        ]
        return TrialOutcome(**outcome_base, status="complete"), stats

    outcomes: list[TrialOutcome] = []
    stats_by_cell: dict[tuple[int, int], dict] = {}
    if jobs == 1:
        executed = map(run_trial, grid)
    else:
        pool = ThreadPoolExecutor(max_workers=jobs)
        executed = pool.map(run_trial, grid)
    for (range_index, range_value, trial_index), (outcome, stats) in zip(
        grid, executed
    ):
        outcomes.append(outcome)
        if stats is not None:
            stats_by_cell[(range_value, trial_index)] = stats
        if on_trial is not None:
            on_trial(outcome)
    if jobs != 1:
        pool.shutdown()

    _write_aggregates(config, out_dir, outcomes, stats_by_cell)

    failed = [o for o in outcomes if o.status != "complete"]
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "kind": "sweep",
        "package_version": __version__,
        "created_at": _now(),
        "status": "complete" if not failed else "partial",
        "config": config.snapshot(),
        "trials": [
            {
                "range": o.range_value,
                "trial": o.trial_index,
                "seed": o.seed,
                "path": o.path,
                "status": o.status,
                "error": o.error,
            }
            for o in outcomes
        ],
        "aggregates_dir": "aggregates",
        "messages_dir": "messages",
    }
    _write_manifest(out_dir, manifest)
    return outcomes


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    mean = statistics.fmean(values)
    std = statistics.pstdev(values) if len(values) > 1 else 0.0
    return mean, std


def _write_aggregates(
    config: RunConfig,
    out_dir: Path,
    outcomes: Sequence[TrialOutcome],
    stats_by_cell: dict[tuple[int, int], dict],
) -> None:
    aggregates = out_dir / "aggregates"
    aggregates.mkdir(exist_ok=True)
    messages_dir = out_dir / "messages"
    messages_dir.mkdir(exist_ok=True)

    ranges = list(config.sweep.ranges)
    trials_of = lambda r: [
        stats_by_cell[(r, t)]
        for t in range(config.sweep.trials)
        if (r, t) in stats_by_cell
    ]

    # Move totals per range, pooled over completed trials.
    move_rows: list[list[object]] = []
    for r in ranges:
        stats = trials_of(r)
        totals = {cmd.value: 0 for cmd in MOVE_ORDER}
        for s in stats:
            for token, count in s["moves"].items():
                totals[token] += count
        total = sum(totals.values())
        move_rows.append(
            [r, *[totals[cmd.value] for cmd in MOVE_ORDER], total]
        )
    write_tsv(
        aggregates / "move_distribution_by_range.tsv",
        ["range", *[cmd.value for cmd in MOVE_ORDER], "total"],
        move_rows,
    )

    # Hashtag progression: every trial's series plus a mean series per range.
    series_rows: list[list[object]] = []
    for r in ranges:
        per_step: dict[int, list[tuple[int, int]]] = {}
        for t in range(config.sweep.trials):
            stats = stats_by_cell.get((r, t))
            if stats is None:
                continue
            for step, active, cumulative in stats["progression"]:
                series_rows.append([r, f"trial_{t:02d}", step, float(active),
                                    float(cumulative)])
                per_step.setdefault(step, []).append((active, cumulative))
        for step in sorted(per_step):
            actives = [float(a) for a, _ in per_step[step]]
            cumulatives = [float(c) for _, c in per_step[step]]
            series_rows.append(
                [r, "mean", step, statistics.fmean(actives),
                 statistics.fmean(cumulatives)]
            )
    write_tsv(
        aggregates / "hashtag_progression_by_range.tsv",
        ["range", "series", "step", "active", "cumulative"],
        series_rows,
    )

    # Lifespan histogram: how many (tag, trial) pairs reached each streak.
    lifespan_rows: list[list[object]] = []
    for r in ranges:
        histogram: dict[int, int] = {}
        for s in trials_of(r):
            for max_run in s["lifespans"]:
                histogram[max_run] = histogram.get(max_run, 0) + 1
        for max_run in sorted(histogram):
            lifespan_rows.append([r, max_run, histogram[max_run]])
    write_tsv(
        aggregates / "lifespan_histogram_by_range.tsv",
        ["range", "max_run", "count"],
        lifespan_rows,
    )

    # Personality outcomes per trial and agent.
    type_rows: list[list[object]] = []
    for r in ranges:
        for t in range(config.sweep.trials):
            stats = stats_by_cell.get((r, t))
            if stats is None:
                continue
            checkpoints = stats["checkpoints"]
            if len(checkpoints) < 2:
                continue
            first, last = checkpoints[0], checkpoints[-1]
            agents = sorted({a for a, _ in stats["types"]})
            for agent in agents:
                before = stats["types"].get((agent, first), "")
                after = stats["types"].get((agent, last), "")
                changed = (
                    ",".join(
                        axis
                        for axis, x, y in zip(("EI", "SN", "TF", "JP"), before, after)
                        if x != y
                    )
                    if len(before) == 4 and len(after) == 4
                    else ""
                )
                type_rows.append([r, t, agent, before, after, changed])
    write_tsv(
        aggregates / "mbti_types_by_range.tsv",
        ["range", "trial", "agent", "type_before", "type_after", "changed_axes"],
        type_rows,
    )

    # One row per trial, success or not.
    trial_rows: list[list[object]] = []
    for o in outcomes:
        stats = stats_by_cell.get((o.range_value, o.trial_index))
        trial_rows.append(
            [
                o.range_value,
                o.trial_index,
                o.seed,
                o.status,
                stats["unique_hashtags"] if stats else "",
                stats["hallucinations"] if stats else "",
                stats["stay_count"] if stats else "",
                stats["stay_in_cluster"] if stats else "",
                stats["parse_failures"] if stats else "",
            ]
        )
    write_tsv(
        aggregates / "trial_summary.tsv",
        ["range", "trial", "seed", "status", "unique_hashtags",
         "hallucinations", "stay_count", "stay_in_cluster", "parse_failures"],
        trial_rows,
    )

    # Mean and spread per range over completed trials.
    range_rows: list[list[object]] = []
    for r in ranges:
        stats = trials_of(r)
        tags_mean, tags_std = _mean_std([float(s["unique_hashtags"]) for s in stats])
        hall_mean, hall_std = _mean_std([float(s["hallucinations"]) for s in stats])
        stay_mean, stay_std = _mean_std([float(s["stay_count"]) for s in stats])
        range_rows.append(
            [r, len(stats), tags_mean, tags_std, hall_mean, hall_std,
             stay_mean, stay_std]
        )
    write_tsv(
        aggregates / "range_summary.tsv",
        ["range", "trials_ok", "unique_hashtags_mean", "unique_hashtags_std",
         "hallucinations_mean", "hallucinations_std", "stay_count_mean",
         "stay_count_std"],
        range_rows,
    )

    # Raw message dump per range, the input for text-embedding analyses.
    for r in ranges:
        path = messages_dir / f"range_{r:02d}.jsonl"
        with path.open("w", encoding="utf-8") as handle:
            for t in range(config.sweep.trials):
                stats = stats_by_cell.get((r, t))
                if stats is None:
                    continue
                for entry in stats["messages"]:
                    handle.write(json.dumps(entry, ensure_ascii=False) + "\n")
