"""Run configuration: flat key=value config files with CLI-flag overrides."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .vectorize import GatingParams

__all__ = ["RunConfig", "load_config_file"]

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


@dataclass
class RunConfig:
    """Everything a pipeline run needs; validated before any work starts."""

    family: str = "haar"
    depth: int = 2
    h1_pct: float = 0.5
    epsilon: float = 1e-6
    persistence_side: int = 96
    wavelet_side: int = 256
    mask: bool = True
    h1_order: str = "top"
    diagram_source: str = "image"
    concat: bool = False
    dump_pyramid: bool = False
    seed: int = 0
    workers: int = 1
    score_agg: str = "max"
    embed_agg: str = "mean"

    def validate(self) -> "RunConfig":
        self.gating()  # GatingParams owns the numeric constraints
        if self.score_agg not in ("mean", "max"):
            raise ValueError(f"score_agg must be 'mean' or 'max', got {self.score_agg!r}")
        if self.embed_agg not in ("mean", "max"):
            raise ValueError(f"embed_agg must be 'mean' or 'max', got {self.embed_agg!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        return self

    def gating(self) -> GatingParams:
        return GatingParams(
            family=self.family,
            depth=self.depth,
            h1_pct=self.h1_pct,
            epsilon=self.epsilon,
            persistence_side=self.persistence_side,
            wavelet_side=self.wavelet_side,
            h1_order=self.h1_order,
            diagram_source=self.diagram_source,
        )

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _coerce(name: str, raw: str, kind: type):
    raw = raw.strip()
    if kind is bool:
        low = raw.lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise ValueError(f"config key {name}: expected a boolean, got {raw!r}")
    return kind(raw)


def load_config_file(path) -> dict:
    """Parse "key = value" lines; '#' starts a comment; keys must be known."""
    known = {f.name: f.type for f in fields(RunConfig)}
    types = {"family": str, "h1_order": str, "diagram_source": str, "score_agg": str, "embed_agg": str,
             "depth": int, "persistence_side": int, "wavelet_side": int, "seed": int, "workers": int,
             "h1_pct": float, "epsilon": float, "mask": bool, "concat": bool, "dump_pyramid": bool}
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = _coerce(key, raw, types[key])
    return out
