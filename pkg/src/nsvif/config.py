"""Run configuration: defaults, JSON config files, environment, overrides.

Precedence, lowest to highest: dataclass defaults, config file values,
environment variables, explicit overrides (CLI flags or API fields).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Literal, Mapping

from .gateway import (
    DEFAULT_CONCURRENCY,
    DEFAULT_TEMPERATURE,
    ENV_BASE_URL,
    ENV_MODEL,
    CassetteStore,
    Gateway,
    GatewayError,
    LiveTransport,
)
from .pipeline import (
    DEFAULT_CHECKER_TIMEOUT,
    DEFAULT_PARSE_RETRIES,
    DEFAULT_REFLECTION_BUDGET,
    DEFAULT_RUNNER_COMMAND,
    VerifierPipeline,
)
from .repair import DEFAULT_REPAIR_BUDGET
from .scripted import ScriptedTransport
from .synth import DEFAULT_REGEN_BUDGET

Backend = Literal["live", "replay", "record", "scripted"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: str = "default"
    base_url: str | None = None
    backend: Backend = "scripted"
    cassette: str | None = None
    mode: Literal["standard", "strict"] = "standard"
    temperature: float = DEFAULT_TEMPERATURE
    concurrency: int = DEFAULT_CONCURRENCY
    reflection_budget: int = DEFAULT_REFLECTION_BUDGET
    parse_retries: int = DEFAULT_PARSE_RETRIES
    repair_budget: int = DEFAULT_REPAIR_BUDGET
    regen_budget: int = DEFAULT_REGEN_BUDGET
    seed: int = 0
    checker_runner: str = DEFAULT_RUNNER_COMMAND
    checker_timeout: float = DEFAULT_CHECKER_TIMEOUT


_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def load_config(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> RunConfig:
    config = RunConfig()
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        unknown = sorted(set(data) - _FIELD_NAMES)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        config = replace(config, **data)
    env_model = os.environ.get(ENV_MODEL)
    if env_model:
        config = replace(config, model=env_model)
    env_base_url = os.environ.get(ENV_BASE_URL)
    if env_base_url:
        config = replace(config, base_url=env_base_url)
    if overrides:
        applicable = {
            key: value
            for key, value in overrides.items()
            if value is not None and key in _FIELD_NAMES
        }
        unknown = sorted(k for k in overrides if k not in _FIELD_NAMES)
        if unknown:
            raise ConfigError(f"unknown config overrides: {', '.join(unknown)}")
        config = replace(config, **applicable)
    if config.backend not in ("live", "replay", "record", "scripted"):
        raise ConfigError(f"unknown backend {config.backend!r}")
    if config.backend == "replay" and not config.cassette:
        raise ConfigError("replay backend requires a cassette path")
    if config.backend == "record" and not config.cassette:
        raise ConfigError("record backend requires a cassette path")
    return config


def build_gateway(config: RunConfig) -> Gateway:
    """Gateway for the configured backend.

    scripted runs the deterministic offline transport; record captures a
    cassette from the live transport when a base URL is configured and from
    the scripted transport otherwise, so fixtures can be built offline.
    """
    if config.backend == "scripted":
        return Gateway(
            "live", transport=ScriptedTransport(), concurrency=config.concurrency
        )
    if config.backend == "replay":
        assert config.cassette is not None
        return Gateway(
            "replay",
            cassette=CassetteStore(config.cassette),
            concurrency=config.concurrency,
        )
    if config.backend == "record":
        transport = (
            LiveTransport(config.base_url)
            if config.base_url or os.environ.get(ENV_BASE_URL)
            else ScriptedTransport()
        )
        assert config.cassette is not None
        return Gateway(
            "record",
            transport=transport,
            cassette=CassetteStore(config.cassette),
            concurrency=config.concurrency,
        )
    if config.backend == "live":
        return Gateway(
            "live",
            transport=LiveTransport(config.base_url),
            concurrency=config.concurrency,
        )
    raise GatewayError(f"unknown backend {config.backend!r}")


def build_pipeline(config: RunConfig, gateway: Gateway | None = None) -> VerifierPipeline:
    return VerifierPipeline(
        gateway if gateway is not None else build_gateway(config),
        model=config.model,
        temperature=config.temperature,
        mode=config.mode,
        reflection_budget=config.reflection_budget,
        parse_retries=config.parse_retries,
        runner_command=config.checker_runner,
        checker_timeout=config.checker_timeout,
    )
