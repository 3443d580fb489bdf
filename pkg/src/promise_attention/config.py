"""Workspace configuration: defaults < key=value file < PROMATTN_* environment."""
from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import DomainError

ENV_PREFIX = "PROMATTN_"


@dataclass(frozen=True)
class WorkspaceConfig:
    store_dir: Path = Path(".promattn")
    period: int = 604800
    slots: int = 336
    beta: float = 1.0
    embedding: str = "softmax"
    forgetting: float = 0.8
    neighbours: int = 6

    def __post_init__(self):
        object.__setattr__(self, "store_dir", Path(self.store_dir))
        if self.period <= 0 or self.slots <= 0 or self.period % self.slots:
            raise DomainError(f"slots={self.slots} must evenly divide period={self.period}")
        if not self.beta > 0:
            raise DomainError("beta must be positive")
        if self.embedding not in ("softmax", "inverted"):
            raise DomainError(f"unknown embedding {self.embedding!r}")
        if not 0.0 < self.forgetting < 1.0:
            raise DomainError("forgetting factor must lie in (0, 1)")
        if self.neighbours < 1:
            raise DomainError("neighbours must be at least 1")

    @property
    def store_path(self) -> Path:
        return self.store_dir / "store.txt"


_CONVERT = {"store_dir": Path, "period": int, "slots": int, "beta": float,
            "embedding": str, "forgetting": float, "neighbours": int}


def _coerce(key: str, raw: str):
    if key not in _CONVERT:
        raise DomainError(f"unknown config key {key!r}")
    try:
        return _CONVERT[key](raw.strip())
    except ValueError:
        raise DomainError(f"bad value for {key}: {raw!r}") from None


def read_config_file(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise DomainError(f"{path}:{ln}: expected key=value")
            key = key.strip().replace("-", "_")
            out[key] = _coerce(key, val)
    return out


def load_config(path=None, env=None, **overrides) -> WorkspaceConfig:
    values = {}
    if path is not None:
        values.update(read_config_file(path))
    env = os.environ if env is None else env
    for key in _CONVERT:
        raw = env.get(ENV_PREFIX + key.upper())
        if raw is not None:
            values[key] = _coerce(key, raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return replace(WorkspaceConfig(), **values) if values else WorkspaceConfig()
