"""Pipeline configuration: defaults, file loading (YAML or JSON), and flag
overrides. Precedence is defaults < config file < explicit flags.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .gateway import GatewayConfig
from .model import ChartType
from .qa import QAStageConfig
from .topics import TopicStageConfig


class BadConfig(ValueError):
    pass


def default_counts() -> dict:
    return {chart_type.value: 10 for chart_type in ChartType}


@dataclass
class PipelineConfig:
    master_seed: int = 0
    output_dir: str = "out"
    counts: dict = field(default_factory=default_counts)
    randomize_appearance: bool = True
    parallelism: int = 1
    max_attempts: int = 3
    failure_threshold: float = 0.01
    topics: TopicStageConfig = field(default_factory=TopicStageConfig)
    qa: QAStageConfig = field(default_factory=QAStageConfig)
    gateway: GatewayConfig = field(default_factory=GatewayConfig)

    def validate(self) -> None:
        known_types = {chart_type.value for chart_type in ChartType}
        unknown = set(self.counts) - known_types
        if unknown:
            raise BadConfig(f"counts for unknown chart types: {sorted(unknown)}")
        if any(v < 0 for v in self.counts.values()):
            raise BadConfig("counts must be non-negative")
        if self.parallelism < 1:
            raise BadConfig("parallelism must be >= 1")
        if self.max_attempts < 1:
            raise BadConfig("max_attempts must be >= 1")
        if not 0 <= self.failure_threshold <= 1:
            raise BadConfig("failure_threshold must be in [0, 1]")
        try:
            self.topics.validate()
            self.qa.validate()
            self.gateway.validate()
        except ValueError as exc:
            raise BadConfig(str(exc)) from exc

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _build(cls, obj: dict, where: str):
    fields = {f.name for f in dataclasses.fields(cls)}
    unknown = set(obj) - fields
    if unknown:
        raise BadConfig(f"unknown keys in {where}: {sorted(unknown)}")
    return cls(**obj)


def config_from_dict(obj: dict) -> PipelineConfig:
    obj = dict(obj or {})
    nested = {
        "topics": TopicStageConfig,
        "qa": QAStageConfig,
        "gateway": GatewayConfig,
    }
    kwargs: dict = {}
    for key, cls in nested.items():
        if key in obj:
            section = obj.pop(key)
            if not isinstance(section, dict):
                raise BadConfig(f"section {key!r} must be a mapping")
            kwargs[key] = _build(cls, section, key)
    top = _build(PipelineConfig, {**obj, **kwargs}, "config")
    return top


def load_config(path: str | Path) -> PipelineConfig:
    """Read a config file; .json parses as JSON, anything else as YAML."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise BadConfig(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            obj = json.loads(text)
        else:
            obj = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise BadConfig(f"cannot parse config {path}: {exc}") from exc
    if obj is None:
        obj = {}
    if not isinstance(obj, dict):
        raise BadConfig(f"config root must be a mapping, got {type(obj).__name__}")
    return config_from_dict(obj)


# flag name -> (section attr or None, field name)
_FLAG_MAP = {
    "master_seed": (None, "master_seed"),
    "output_dir": (None, "output_dir"),
    "randomize_appearance": (None, "randomize_appearance"),
    "parallelism": (None, "parallelism"),
    "max_attempts": (None, "max_attempts"),
    "failure_threshold": (None, "failure_threshold"),
    "batch_size": ("topics", "batch_size"),
    "budget_factor": ("topics", "budget_factor"),
    "qa_mode": ("qa", "mode"),
    "k_template": ("qa", "k_template"),
    "verify": ("qa", "verify"),
    "drop_unverified": ("qa", "drop_unverified"),
    "tolerance": ("qa", "tolerance"),
    "gateway_mode": ("gateway", "mode"),
    "endpoint_url": ("gateway", "endpoint_url"),
    "api_key_env": ("gateway", "api_key_env"),
    "model": ("gateway", "model"),
    "max_retries": ("gateway", "max_retries"),
    "max_concurrent_requests": ("gateway", "max_concurrent_requests"),
    "mock_seed": ("gateway", "mock_seed"),
}


def apply_overrides(cfg: PipelineConfig, overrides: dict) -> PipelineConfig:
    """Set the given flag values onto cfg in place; None values are skipped.

    ``count`` applies one figure count to every chart type; ``counts`` takes
    a full per-type mapping.
    """
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "count":
            cfg.counts = {chart_type.value: int(value) for chart_type in ChartType}
            continue
        if key == "counts":
            cfg.counts = dict(value)
            continue
        if key not in _FLAG_MAP:
            raise BadConfig(f"unknown override {key!r}")
        section, attr = _FLAG_MAP[key]
        target = cfg if section is None else getattr(cfg, section)
        setattr(target, attr, value)
    return cfg
