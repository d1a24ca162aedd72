"""Plain-text experiment configuration: ``key = value`` lines, ``#`` comments.

Lists are comma separated; integer ranges may be written ``a..b`` (inclusive).
Keys left unset take the per-experiment defaults in ``EXPERIMENT_DEFAULTS``;
``seed`` has no default.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

SNR_CONVENTIONS = ("beta_sq_over_sigma_sq", "beta_sq_over_two_sigma_sq")
EXPERIMENTS = ("mcrlb-sweep", "crlb-scatter", "rmse-sweep", "energy-cdf", "nstar-cdf")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str | None = None
    seed: int | None = None
    trials: int | None = None
    n: tuple[int, ...] | None = None
    k: int | None = None
    snr_db: tuple[float, ...] | None = None
    snr_convention: str = "beta_sq_over_sigma_sq"
    channel: str | None = None
    channel_scale: float = 1.0
    xi: float = 1.0
    power: float = 2.0
    beta: float = 1.0  # bound sweeps only
    sigma: float = 1.0  # bound sweeps only
    block_length: float = 100.0
    tau: float = 1.0
    feedback_energy: float = 0.0
    grid_step_deg: float = 1.0
    baseline: bool = True
    workers: int = 1
    out: str | None = None

    def resolved(self, experiment: str | None = None) -> "ExperimentConfig":
        """Fill unset fields from the experiment defaults and validate."""
        name = experiment or self.experiment
        if name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")
        if self.experiment is not None and experiment is not None and self.experiment != experiment:
            raise ConfigError(f"config is for {self.experiment!r}, not {experiment!r}")
        updates = {"experiment": name}
        for key, value in EXPERIMENT_DEFAULTS[name].items():
            if getattr(self, key) is None:
                updates[key] = value
        cfg = replace(self, **updates)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.seed is None:
            raise ConfigError("seed is required (set seed = ... or pass --seed)")
        if not (0 <= self.seed < 2**64):
            raise ConfigError(f"seed must be in [0, 2**64), got {self.seed}")
        if self.trials is None or self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not self.n:
            raise ConfigError("n must be a nonempty list")
        if any(v < 1 for v in self.n):
            raise ConfigError(f"n values must be >= 1, got {self.n}")
        if self.k is None or self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")
        if not self.snr_db:
            raise ConfigError("snr_db must be a nonempty list")
        if any(math.isnan(s) or s == -math.inf for s in self.snr_db):
            raise ConfigError("snr_db values must be numbers or inf")
        if self.snr_convention not in SNR_CONVENTIONS:
            raise ConfigError(f"snr_convention must be one of {SNR_CONVENTIONS}")
        if self.channel not in ("unit", "rayleigh"):
            raise ConfigError(f"channel must be 'unit' or 'rayleigh', got {self.channel!r}")
        if not (0 < self.xi <= 1):
            raise ConfigError("xi must be in (0, 1]")
        for key in ("power", "beta", "sigma", "block_length", "tau", "channel_scale", "grid_step_deg"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive")
        if self.feedback_energy < 0:
            raise ConfigError("feedback_energy must be non-negative")
        if self.grid_step_deg > 90:
            raise ConfigError("grid_step_deg must be <= 90")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def echo(self) -> list[str]:
        """key=value lines for every setting that affects results."""
        lines = []
        for f in fields(self):
            if f.name in ("workers", "out"):
                continue
            lines.append(f"{f.name}={_format_value(getattr(self, f.name))}")
        return lines


EXPERIMENT_DEFAULTS = {
    "mcrlb-sweep": dict(trials=1000, n=tuple(range(3, 21)), k=2, snr_db=(0.0,), channel="unit"),
    "crlb-scatter": dict(trials=1500, n=(4,), k=2, snr_db=(0.0,), channel="unit"),
    "rmse-sweep": dict(trials=10000, n=tuple(range(3, 17)), k=2, snr_db=(0.0, 5.0, 10.0, 15.0, 20.0), channel="unit"),
    "energy-cdf": dict(trials=1500, n=(4,), k=2, snr_db=(0.0, 10.0, 20.0), channel="unit"),
    "nstar-cdf": dict(trials=1500, n=(3,), k=2, snr_db=(0.0, 5.0, 10.0), channel="rayleigh"),
}


def _format_value(v) -> str:
    if isinstance(v, tuple):
        return ",".join(_format_value(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def _parse_int_list(text: str) -> tuple[int, ...]:
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = (int(x) for x in part.split("..", 1))
            if hi < lo:
                raise ValueError(f"empty range {part}")
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    return tuple(out)


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {
    "experiment": str,
    "seed": int,
    "trials": int,
    "n": _parse_int_list,
    "k": int,
    "snr_db": _parse_float_list,
    "snr_convention": str,
    "channel": str,
    "channel_scale": float,
    "xi": float,
    "power": float,
    "beta": float,
    "sigma": float,
    "block_length": float,
    "tau": float,
    "feedback_energy": float,
    "grid_step_deg": float,
    "baseline": _parse_bool,
    "workers": int,
    "out": str,
}


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    return parse_config(text, source=str(p))
