"""Experiment configuration: plain-text ``key = value`` files with ``#`` comments.

Lists are comma separated. Unknown keys, malformed values and failed range
checks raise :class:`ConfigError` naming the offending line.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

__all__ = ["ConfigError", "ExperimentConfig", "EXPERIMENTS", "parse_config_text", "validate_config"]

EXPERIMENTS = (
    "iso-gaussian",
    "leech-gaussian",
    "perfect-security",
    "bench-runtime",
    "acceptance-vs-dim",
    "acf",
    "appendix-a",
)


class ConfigError(ValueError):
    pass


def _int_list(raw: str) -> list[int]:
    return [int(v) for v in raw.split(",") if v.strip()]


def _float_list(raw: str) -> list[float]:
    return [float(v) for v in raw.split(",") if v.strip()]


def _text(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


@dataclass
class ExperimentConfig:
    experiment: str = "iso-gaussian"
    d: int = 1
    sigma2: float = 1.0
    sigma2_values: list = field(default_factory=lambda: [1.0])
    d_values: list = field(default_factory=lambda: [10, 50, 100])
    replicas: int = 100_000
    t_values: list = field(default_factory=lambda: [0, 1, 2, 5, 10, 20])
    seed: int = 0
    output_path: str = "out.csv"
    backend: str = "exact"
    lattice: str = "zd"
    n_samples: int = 10_000
    burn_in: int = 100
    max_lag: int = 50
    window_max: int = 10
    bench_iterations: int = 1000
    warmup: int = 100
    oracle_samples: int = 200_000
    oracle_iterations: int = 500
    leapfrog_steps: Optional[int] = None
    step_size: Optional[float] = None
    momentum_variance: float = 9.0
    inner_iterations: int = 5

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}; got {self.experiment!r}")
        if self.d < 1:
            raise ConfigError("d must be a positive integer")
        if not self.sigma2 > 0:
            raise ConfigError("sigma2 must be positive")
        if any(not s > 0 for s in self.sigma2_values):
            raise ConfigError("sigma2_values must all be positive")
        if any(v < 1 for v in self.d_values):
            raise ConfigError("d_values must all be positive")
        if self.replicas < 100:
            raise ConfigError("replicas must be at least 100")
        if not self.t_values or any(t < 0 for t in self.t_values):
            raise ConfigError("t_values must be a non-empty list of non-negative integers")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if self.backend not in ("exact", "hmc"):
            raise ConfigError("backend must be exact or hmc")
        if not (self.lattice in ("zd", "leech") or self.lattice.startswith("file:")):
            raise ConfigError("lattice must be zd, leech or file:<path>")
        for name in ("n_samples", "max_lag", "bench_iterations", "oracle_samples", "inner_iterations"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("burn_in", "window_max", "warmup", "oracle_iterations"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.leapfrog_steps is not None and self.leapfrog_steps < 1:
            raise ConfigError("leapfrog_steps must be positive")
        if self.step_size is not None and not self.step_size > 0:
            raise ConfigError("step_size must be positive")
        if not self.momentum_variance > 0:
            raise ConfigError("momentum_variance must be positive")
        if self.experiment == "acf" and self.n_samples <= self.max_lag:
            raise ConfigError("acf needs n_samples > max_lag")
        return self

    def items(self):
        """``(key, text)`` pairs in declaration order, omitting unset optionals."""
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, list):
                yield f.name, ",".join(_text(x) for x in v)
            else:
                yield f.name, _text(v)

    def serialize(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.items())


_PARSERS = {
    "experiment": str,
    "d": int,
    "sigma2": float,
    "sigma2_values": _float_list,
    "d_values": _int_list,
    "replicas": int,
    "t_values": _int_list,
    "seed": int,
    "output_path": str,
    "backend": str,
    "lattice": str,
    "n_samples": int,
    "burn_in": int,
    "max_lag": int,
    "window_max": int,
    "bench_iterations": int,
    "warmup": int,
    "oracle_samples": int,
    "oracle_iterations": int,
    "leapfrog_steps": int,
    "step_size": float,
    "momentum_variance": float,
    "inner_iterations": int,
}


def parse_config_text(text: str, source: str = "<config>"):
    """Parse ``key = value`` lines.

    Returns ``(values, lines)``: typed values keyed by field name and the
    ``source:lineno`` each key came from.
    """
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected key = value, got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _PARSERS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](val)
        except ValueError:
            raise ConfigError(f"{where}: malformed value for {key}: {val!r}") from None
        lines[key] = where
    return values, lines


def validate_config(path=None, overrides: dict | None = None, text: str | None = None) -> ExperimentConfig:
    """Build a validated config from a file (or text), then apply non-``None`` overrides."""
    values, lines = {}, {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from None
        values, lines = parse_config_text(text, str(p))
    elif text is not None:
        values, lines = parse_config_text(text)
    for k, v in (overrides or {}).items():
        if v is not None:
            if k not in _PARSERS:
                raise ConfigError(f"unknown override {k!r}")
            values[k] = v
            lines.pop(k, None)
    cfg = ExperimentConfig(**values)
    # check one key at a time so errors can name the line a bad value came from
    for key in values:
        probe = dataclasses.replace(ExperimentConfig(), **{key: values[key]})
        try:
            probe.validate()
        except ConfigError as exc:
            where = lines.get(key)
            raise ConfigError(f"{where}: {exc}" if where else str(exc)) from None
    return cfg.validate()
