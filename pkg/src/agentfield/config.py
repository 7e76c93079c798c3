"""Run configuration: TOML file -> validated settings objects.

Validation is strict: unknown sections or keys are errors, and the backend
table only accepts the keys that its kind actually uses, so a typo can never
silently fall back to a default.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .backends import GenerationParams, RemoteBackend, ScriptedBackend, TextBackend
from .errors import ConfigError
from .world import WorldConfig

_MISSING = object()


def _take(
    table: dict[str, Any],
    key: str,
    kind: type | tuple[type, ...],
    where: str,
    default: Any = _MISSING,
) -> Any:
    """Pop a typed value from a table, with section.key context on errors."""
    if key not in table:
        if default is _MISSING:
            raise ConfigError(f"{where}: missing required key {key!r}")
        return default
    value = table.pop(key)
    kinds = kind if isinstance(kind, tuple) else (kind,)
    # bool is an int subclass; only accept it where bool was asked for.
    if isinstance(value, bool) and bool not in kinds:
        raise ConfigError(
            f"{where}.{key}: expected {kinds[0].__name__}, got a boolean"
        )
    if not isinstance(value, kinds):
        raise ConfigError(
            f"{where}.{key}: expected {kinds[0].__name__}, "
            f"got {type(value).__name__}"
        )
    return value


def _reject_extras(table: dict[str, Any], where: str) -> None:
    if table:
        raise ConfigError(f"{where}: unknown keys {sorted(table)}")


def _int_list(value: list[Any], where: str) -> tuple[int, ...]:
    out: list[int] = []
    for item in value:
        if isinstance(item, bool) or not isinstance(item, int):
            raise ConfigError(f"{where}: expected a list of integers")
        out.append(item)
    return tuple(out)


@dataclass(frozen=True)
class BackendSettings:
    kind: str = "scripted"
    params: GenerationParams = GenerationParams()
    max_workers: int = 1
    script_path: str | None = None
    fallback_seed: int = 0
    endpoint_url: str | None = None
    model_name: str | None = None
    request_timeout_s: float = 60.0
    max_retries: int = 3
    include_top_k: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("scripted", "remote"):
            raise ConfigError(f"backend.kind must be scripted or remote, got {self.kind!r}")
        if self.max_workers < 1:
            raise ConfigError("backend.max_workers must be >= 1")
        if self.kind == "remote" and not self.endpoint_url:
            raise ConfigError("backend.endpoint_url is required for kind = remote")
        if self.kind == "remote" and not self.model_name:
            raise ConfigError("backend.model_name is required for kind = remote")

    def build(self, script_path_override: str | None = None) -> TextBackend:
        if self.kind == "scripted":
            path = script_path_override or self.script_path
            return ScriptedBackend.from_file(path, fallback_seed=self.fallback_seed)
        assert self.endpoint_url is not None and self.model_name is not None
        return RemoteBackend(
            endpoint_url=self.endpoint_url,
            model_name=self.model_name,
            request_timeout_s=self.request_timeout_s,
            max_retries=self.max_retries,
            include_top_k=self.include_top_k,
        )


@dataclass(frozen=True)
class SweepSettings:
    ranges: tuple[int, ...] = (0, 5, 10, 15, 20, 25)
    trials: int = 10
    base_seed: int = 0

    def __post_init__(self) -> None:
        if not self.ranges:
            raise ConfigError("sweep.ranges must be nonempty")
        if any(r < 0 for r in self.ranges):
            raise ConfigError("sweep.ranges entries must be >= 0")
        if len(set(self.ranges)) != len(self.ranges):
            raise ConfigError("sweep.ranges entries must be distinct")
        if self.trials < 1:
            raise ConfigError("sweep.trials must be >= 1")

    def trial_seed(self, range_index: int, trial_index: int) -> int:
        """Deterministic per-trial seed, unique across the whole sweep grid."""
        return self.base_seed * 1000 + range_index * 100 + trial_index


@dataclass(frozen=True)
class MbtiSettings:
    question_bank: str | None = None
    checkpoints: tuple[int, ...] = ()

    def resolved_checkpoints(self, num_steps: int) -> tuple[int, ...]:
        """Default to start-of-run and end-of-run when not configured."""
        return self.checkpoints if self.checkpoints else (0, num_steps)


@dataclass(frozen=True)
class RunConfig:
    world: WorldConfig = WorldConfig()
    backend: BackendSettings = BackendSettings()
    sweep: SweepSettings = SweepSettings()
    mbti: MbtiSettings = MbtiSettings()
    templates_dir: str | None = None

    def snapshot(self) -> dict[str, Any]:
        """Config as a plain dict, for embedding in a run manifest."""
        return {
            "world": {
                "side_length": self.world.side_length,
                "num_agents": self.world.num_agents,
                "message_range": self.world.message_range,
                "num_steps": self.world.num_steps,
                "rng_seed": self.world.rng_seed,
            },
            "backend": {
                "kind": self.backend.kind,
                "temperature": self.backend.params.temperature,
                "max_tokens": self.backend.params.max_tokens,
                "top_p": self.backend.params.top_p,
                "top_k": self.backend.params.top_k,
                "max_workers": self.backend.max_workers,
                "script_path": self.backend.script_path,
                "fallback_seed": self.backend.fallback_seed,
                "endpoint_url": self.backend.endpoint_url,
                "model_name": self.backend.model_name,
            },
            "sweep": {
                "ranges": list(self.sweep.ranges),
                "trials": self.sweep.trials,
                "base_seed": self.sweep.base_seed,
            },
            "mbti": {
                "question_bank": self.mbti.question_bank,
                "checkpoints": list(self.mbti.checkpoints),
            },
            "templates_dir": self.templates_dir,
        }


def _parse_world(table: dict[str, Any]) -> WorldConfig:
    where = "world"
    try:
        config = WorldConfig(
            side_length=_take(table, "side_length", int, where, 50),
            num_agents=_take(table, "num_agents", int, where, 10),
            message_range=_take(table, "message_range", int, where, 5),
            num_steps=_take(table, "num_steps", int, where, 100),
            rng_seed=_take(table, "rng_seed", int, where, 0),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    _reject_extras(table, where)
    return config


def _parse_backend(table: dict[str, Any]) -> BackendSettings:
    where = "backend"
    kind = _take(table, "kind", str, where, "scripted")
    try:
        params = GenerationParams(
            temperature=float(_take(table, "temperature", (int, float), where, 0.7)),
            max_tokens=_take(table, "max_tokens", int, where, 256),
            top_p=float(_take(table, "top_p", (int, float), where, 0.95)),
            top_k=_take(table, "top_k", int, where, 40),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    common = {
        "kind": kind,
        "params": params,
        "max_workers": _take(table, "max_workers", int, where, 1),
    }
    if kind == "scripted":
        settings = BackendSettings(
            **common,
            script_path=_take(table, "script_path", str, where, None),
            fallback_seed=_take(table, "fallback_seed", int, where, 0),
        )
    elif kind == "remote":
        settings = BackendSettings(
            **common,
            endpoint_url=_take(table, "endpoint_url", str, where, None),
            model_name=_take(table, "model_name", str, where, None),
            request_timeout_s=float(
                _take(table, "request_timeout_s", (int, float), where, 60.0)
            ),
            max_retries=_take(table, "max_retries", int, where, 3),
            include_top_k=_take(table, "include_top_k", bool, where, True),
        )
    else:
        raise ConfigError(f"{where}.kind must be scripted or remote, got {kind!r}")
    _reject_extras(table, where)
    return settings


def _parse_sweep(table: dict[str, Any]) -> SweepSettings:
    where = "sweep"
    ranges = table.pop("ranges", None)
    if ranges is not None:
        if not isinstance(ranges, list):
            raise ConfigError(f"{where}.ranges: expected a list of integers")
        ranges = _int_list(ranges, f"{where}.ranges")
    settings = SweepSettings(
        ranges=ranges if ranges is not None else SweepSettings().ranges,
        trials=_take(table, "trials", int, where, 10),
        base_seed=_take(table, "base_seed", int, where, 0),
    )
    _reject_extras(table, where)
    return settings


def _parse_mbti(table: dict[str, Any]) -> MbtiSettings:
    where = "mbti"
    checkpoints = table.pop("checkpoints", None)
    if checkpoints is not None:
        if not isinstance(checkpoints, list):
            raise ConfigError(f"{where}.checkpoints: expected a list of integers")
        checkpoints = _int_list(checkpoints, f"{where}.checkpoints")
        if any(c < 0 for c in checkpoints):
            raise ConfigError(f"{where}.checkpoints entries must be >= 0")
    settings = MbtiSettings(
        question_bank=_take(table, "question_bank", str, where, None),
        checkpoints=checkpoints if checkpoints is not None else (),
    )
    _reject_extras(table, where)
    return settings


def parse_config(data: dict[str, Any], base_dir: Path | None = None) -> RunConfig:
    """Validate an already-decoded TOML document.

    Relative script, bank, and template paths resolve against the config
    file's directory so a config works no matter where it is invoked from.
    """
    data = dict(data)
    world = _parse_world(dict(data.pop("world", {})))
    backend = _parse_backend(dict(data.pop("backend", {})))
    sweep = _parse_sweep(dict(data.pop("sweep", {})))
    mbti = _parse_mbti(dict(data.pop("mbti", {})))
    templates_dir = _take(data, "templates_dir", str, "config", None)
    _reject_extras(data, "config")

    if base_dir is not None:
        def resolve(path: str | None) -> str | None:
            if path is None:
                return None
            p = Path(path)
            return str(p if p.is_absolute() else base_dir / p)

        backend = replace(backend, script_path=resolve(backend.script_path))
        mbti = replace(mbti, question_bank=resolve(mbti.question_bank))
        templates_dir = resolve(templates_dir)

    return RunConfig(
        world=world,
        backend=backend,
        sweep=sweep,
        mbti=mbti,
        templates_dir=templates_dir,
    )


def config_from_snapshot(data: dict[str, Any]) -> RunConfig:
    """Rebuild a RunConfig from the snapshot a manifest carries.

    Snapshots are written by RunConfig.snapshot(), so unlike TOML input they
    hold every field for both backend kinds; fields the kind doesn't use are
    ignored rather than rejected.
    """
    try:
        world_t = dict(data.get("world", {}))
        backend_t = dict(data.get("backend", {}))
        sweep_t = dict(data.get("sweep", {}))
        mbti_t = dict(data.get("mbti", {}))
        world = WorldConfig(
            side_length=int(world_t.get("side_length", 50)),
            num_agents=int(world_t.get("num_agents", 10)),
            message_range=int(world_t.get("message_range", 5)),
            num_steps=int(world_t.get("num_steps", 100)),
            rng_seed=int(world_t.get("rng_seed", 0)),
        )
        params = GenerationParams(
            temperature=float(backend_t.get("temperature", 0.7)),
            max_tokens=int(backend_t.get("max_tokens", 256)),
            top_p=float(backend_t.get("top_p", 0.95)),
            top_k=int(backend_t.get("top_k", 40)),
        )
        backend = BackendSettings(
            kind=str(backend_t.get("kind", "scripted")),
            params=params,
            max_workers=int(backend_t.get("max_workers", 1)),
            script_path=backend_t.get("script_path"),
            fallback_seed=int(backend_t.get("fallback_seed", 0)),
            endpoint_url=backend_t.get("endpoint_url"),
            model_name=backend_t.get("model_name"),
        )
        sweep = SweepSettings(
            ranges=tuple(int(r) for r in sweep_t.get("ranges", SweepSettings().ranges)),
            trials=int(sweep_t.get("trials", 10)),
            base_seed=int(sweep_t.get("base_seed", 0)),
        )
        mbti = MbtiSettings(
            question_bank=mbti_t.get("question_bank"),
            checkpoints=tuple(int(c) for c in mbti_t.get("checkpoints", ())),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config snapshot: {exc}") from exc
    return RunConfig(
        world=world,
        backend=backend,
        sweep=sweep,
        mbti=mbti,
        templates_dir=data.get("templates_dir"),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    try:
        return parse_config(data, base_dir=path.parent)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
