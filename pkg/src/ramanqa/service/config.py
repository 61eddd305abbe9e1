"""Service configuration: a JSON file plus environment for secrets."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..errors import ConfigError


@dataclass
class Config:
    store_path: str = "peaks.db"
    index_path: str = "literature.index"
    chunks_path: str = "chunks.jsonl"
    provider: str = "mock"  # "mock" | "remote"
    planner_endpoint: str | None = None
    synth_endpoint: str | None = None
    judge_endpoint: str | None = None
    embed_endpoint: str | None = None
    model: str = "default"
    api_key: str | None = None  # usually from RAMANQA_API_KEY instead
    embed_dim: int = 256
    chunk_size: int = 1000
    chunk_overlap: int = 150
    k: int = 10
    row_limit: int = 50
    sg_window: int = 31
    sg_polyorder: int = 3
    als_lam: float = 1e5
    als_p: float = 0.01
    als_iters: int = 10
    confidence_threshold: float = 0.98
    spectra_format: str = "jsonl"
    leg_timeout_s: float = 30.0
    session_log: str | None = None
    base_dir: str = "."

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    @property
    def store_file(self) -> Path:
        return self.resolve(self.store_path)

    @property
    def index_file(self) -> Path:
        return self.resolve(self.index_path)

    @property
    def chunks_file(self) -> Path:
        return self.resolve(self.chunks_path)

    def validate(self) -> None:
        if self.provider not in ("mock", "remote"):
            raise ConfigError(f"provider must be 'mock' or 'remote', got {self.provider!r}")
        if self.provider == "remote":
            missing = [
                name
                for name, value in (
                    ("planner_endpoint", self.planner_endpoint),
                    ("synth_endpoint", self.synth_endpoint),
                    ("embed_endpoint", self.embed_endpoint),
                )
                if not value
            ]
            if missing:
                raise ConfigError(
                    f"remote provider requires endpoints: {', '.join(missing)}"
                )
        if not Path(self.base_dir).exists():
            raise ConfigError(f"base_dir does not exist: {self.base_dir}")
        if self.chunk_overlap >= self.chunk_size:
            raise ConfigError("chunk_overlap must be smaller than chunk_size")
        if self.k < 1 or self.row_limit < 1:
            raise ConfigError("k and row_limit must be >= 1")


def load_config(path: str | Path | None) -> Config:
    """Load config JSON; unknown keys are rejected to catch typos."""
    if path is None:
        cfg = Config()
        cfg.validate()
        return cfg
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    known = {f.name for f in fields(Config)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = Config(**data)
    if "base_dir" not in data:
        cfg.base_dir = str(path.parent)
    cfg.validate()
    return cfg
