"""Experiment configuration: a flat ``key = value`` text format (dotted
keys for the model block) or JSON with the same keys, optionally nested.

Example::

    # compound Poisson cross-validation
    experiment = verify-identity
    model.kind = cp
    model.rate = 1
    model.jump.kind = gaussian
    model.jump.mean = 0
    model.jump.sd = 1
    model.mu = 0.2
    T_grid = 50
    reps = 10000
    cutoff = 1e-3
    seed = 20260808

Grammar: one ``key = value`` pair per line; ``#`` starts a comment; values
are numbers, bare strings, or comma/space separated number lists.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .limitlaws import DEFAULT_EPS
from .models import (
    BrownianDrift,
    CompoundPoissonDrift,
    Gaussian,
    LogCorrectedPareto,
    Pareto,
    PointMass,
    StableProcess,
    TwoPoint,
)
from .sbrep import DEFAULT_CUTOFF

__all__ = ["ExperimentConfig", "EXPERIMENTS", "load_config", "config_from_mapping"]

EXPERIMENTS = (
    "sb-props",
    "verify-identity",
    "verify-clt",
    "verify-stable",
    "verify-heavy",
    "tail-index",
    "compare-length",
    "theta-scan",
    "hull-props",
)

_KNOWN_KEYS = {
    "experiment",
    "T_grid",
    "reps",
    "cutoff",
    "eps",
    "seed",
    "workers",
    "out",
    "checks",
    "model.kind",
    "model.sigma",
    "model.mu",
    "model.rate",
    "model.alpha",
    "model.beta",
    "model.scale",
    "model.jump.kind",
    "model.jump.p_up",
    "model.jump.up",
    "model.jump.down",
    "model.jump.mean",
    "model.jump.sd",
    "model.jump.tail_index",
    "model.jump.scale",
    "model.jump.x",
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    model: object | None
    t_grid: tuple
    reps: int
    cutoff: float = DEFAULT_CUTOFF
    eps: float = DEFAULT_EPS
    seed: int = 0
    workers: int = 1
    out: str | None = None
    checks: str = "all"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}"
            )
        if self.reps < 100:
            raise ConfigError(f"replication count must be >= 100, got {self.reps}")
        if not self.t_grid or any(
            b <= a for a, b in zip(self.t_grid, self.t_grid[1:])
        ):
            raise ConfigError(f"T grid must be nonempty and strictly increasing: {self.t_grid}")
        if any(t <= 0 for t in self.t_grid):
            raise ConfigError("T grid entries must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("worker count must be >= 1")
        if not 0.0 < self.cutoff <= 1.0:
            raise ConfigError(f"cutoff must lie in (0, 1], got {self.cutoff}")
        if not 0.0 < self.eps < 1.0:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")


def _parse_scalar(text):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def _parse_value(text):
    text = text.strip()
    parts = [p for chunk in text.split(",") for p in chunk.split()]
    if len(parts) > 1:
        return [_parse_scalar(p) for p in parts]
    return _parse_scalar(text)


def parse_flat_text(text):
    """Flat ``key = value`` lines to a dotted-key mapping."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = _parse_value(value)
    return out


def _flatten(mapping, prefix=""):
    flat = {}
    for key, value in mapping.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, prefix=f"{name}."))
        else:
            flat[name] = value
    return flat


_JUMPS = {
    "two-point": (TwoPoint, ("p_up", "up", "down")),
    "gaussian": (Gaussian, ("mean", "sd")),
    "pareto": (Pareto, ("tail_index", "scale", "p_up")),
    "point-mass": (PointMass, ("x",)),
    "log-pareto": (LogCorrectedPareto, ()),
}


def _build_jump(flat):
    kind = flat.get("model.jump.kind")
    if kind is None:
        raise ConfigError("compound Poisson model needs model.jump.kind")
    if kind not in _JUMPS:
        raise ConfigError(f"unknown jump kind {kind!r}; choose from {sorted(_JUMPS)}")
    cls, fields = _JUMPS[kind]
    kwargs = {}
    for name in fields:
        key = f"model.jump.{name}"
        if key in flat:
            kwargs[name if name != "mean" else "mean_"] = float(flat[key])
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"jump law {kind!r}: {exc}") from None


def _build_model(flat):
    kind = flat.get("model.kind")
    if kind is None:
        return None
    try:
        if kind == "brownian":
            return BrownianDrift(
                sigma=float(flat.get("model.sigma", 1.0)),
                mu=float(flat.get("model.mu", 0.0)),
            )
        if kind == "cp":
            return CompoundPoissonDrift(
                rate=float(flat.get("model.rate", 1.0)),
                jump=_build_jump(flat),
                mu=float(flat.get("model.mu", 0.0)),
            )
        if kind == "stable":
            return StableProcess(
                alpha=float(flat["model.alpha"]),
                beta=float(flat.get("model.beta", 0.0)),
                scale=float(flat.get("model.scale", 1.0)),
                mu=float(flat.get("model.mu", 0.0)),
            )
    except KeyError as exc:
        raise ConfigError(f"model kind {kind!r} is missing parameter {exc}") from None
    raise ConfigError(f"unknown model kind {kind!r}; choose brownian, cp or stable")


def config_from_mapping(mapping) -> ExperimentConfig:
    flat = _flatten(mapping)
    if "t_grid" in flat:  # accepted alias
        flat["T_grid"] = flat.pop("t_grid")
    unknown = set(flat) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    if "experiment" not in flat:
        raise ConfigError("configuration needs an 'experiment' key")
    grid = flat.get("T_grid", 1.0)
    if not isinstance(grid, list):
        grid = [grid]
    kwargs = dict(
        experiment=str(flat["experiment"]),
        model=_build_model(flat),
        t_grid=tuple(float(t) for t in grid),
        reps=int(flat.get("reps", 1000)),
    )
    for key, cast in (
        ("cutoff", float),
        ("eps", float),
        ("seed", int),
        ("workers", int),
        ("out", str),
        ("checks", str),
    ):
        if key in flat:
            kwargs[key] = cast(flat[key])
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    """Read a configuration file; JSON when the first non-blank character
    is '{', the flat key = value grammar otherwise."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            mapping = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON configuration: {exc}") from None
    else:
        mapping = parse_flat_text(text)
    return config_from_mapping(mapping)
