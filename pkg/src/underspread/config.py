"""Experiment configuration: flat ``key = value`` files, environment and command-line overrides.

Precedence, highest first: command line, ``UB_*`` environment variables,
config file, built-in defaults.  Every key can be set at every level.
"""
from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass
from pathlib import Path

from .channel import SpacingConvention
from .exceptions import ValidationError
from .streams import check_seed

ENV_PREFIX = "UB_"
PDP_KINDS = ("exponential", "tabulated")


class ConfigError(ValidationError):
    """A config value is missing, unknown or malformed; ``field`` is the key."""


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text: str) -> tuple:
    out = []
    for v in text.replace(",", " ").split():
        f = float(v)
        if f != int(f):
            raise ValueError(f"{v!r} is not an integer")
        out.append(int(f))
    return tuple(out)


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


def _opt_int(text: str):
    return None if text.strip().lower() in ("", "none") else int(float(text))


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fundamental parameters of one experiment.

    Times are in seconds, frequencies in hertz, ``snr`` is linear.
    ``tau_t`` truncates the delay profile when computing the correlation
    coefficient; when unset it equals ``prefix_length``.
    """

    pdp_kind: str = "exponential"
    tau_c: float = 1.7e-8
    pdp_table: str | None = None
    tau_t: float | None = None
    bandwidth: float = 5e6
    block_length: float = 5.30e-3
    prefix_length: float = 2e-7
    snr: float = 1.80e-2
    coherence_fraction: float = 0.99
    convention: str = "cyclic"
    trials: int = 1000
    seed: int = 0
    workers: int = 1
    sweep_n: tuple = ()
    sweep_bandwidth: tuple = ()
    sweep_points: int = 20
    sweep_parallel: bool = False
    n_truncate: int | None = None
    a_sq: float | None = None
    out: str = "out"
    recursion_scale: float = 1.0

    def __post_init__(self):
        if self.pdp_kind not in PDP_KINDS:
            raise ConfigError(f"must be one of {PDP_KINDS}", field="pdp_kind")
        if self.pdp_kind == "exponential" and not (self.tau_c > 0.0 and math.isfinite(self.tau_c)):
            raise ConfigError("must be finite and > 0", field="tau_c")
        if self.pdp_kind == "tabulated" and not self.pdp_table:
            raise ConfigError("tabulated profile needs a table path", field="pdp_table")
        if self.tau_t is not None and not self.tau_t > 0.0:
            raise ConfigError("must be > 0", field="tau_t")
        for key in ("bandwidth", "block_length"):
            if not getattr(self, key) > 0.0:
                raise ConfigError("must be > 0", field=key)
        if not self.prefix_length >= 0.0:
            raise ConfigError("must be >= 0", field="prefix_length")
        if not (self.snr >= 0.0 and math.isfinite(self.snr)):
            raise ConfigError("must be finite and >= 0", field="snr")
        if not 0.0 < self.coherence_fraction <= 1.0:
            raise ConfigError("must be in (0, 1]", field="coherence_fraction")
        try:
            SpacingConvention(self.convention)
        except ValueError:
            raise ConfigError("must be 'cyclic' or 'paper-table'", field="convention") from None
        if self.trials < 1:
            raise ConfigError("must be >= 1", field="trials")
        if self.workers < 1:
            raise ConfigError("must be >= 1", field="workers")
        try:
            check_seed(self.seed)
        except ValidationError as exc:
            raise ConfigError(str(exc).split(": ", 1)[-1], field="seed") from None
        if any(n < 1 for n in self.sweep_n):
            raise ConfigError("entries must be >= 1", field="sweep_n")
        if any(not w > 0.0 for w in self.sweep_bandwidth):
            raise ConfigError("entries must be > 0", field="sweep_bandwidth")
        if self.sweep_n and self.sweep_bandwidth:
            raise ConfigError("give sweep_n or sweep_bandwidth, not both", field="sweep_n")
        if self.sweep_points < 1:
            raise ConfigError("must be >= 1", field="sweep_points")
        if self.n_truncate is not None and self.n_truncate < 1:
            raise ConfigError("must be >= 1", field="n_truncate")
        if self.a_sq is not None and not 0.0 <= self.a_sq <= 1.0:
            raise ConfigError("must be in [0, 1]", field="a_sq")
        if not self.recursion_scale > 0.0:
            raise ConfigError("must be > 0", field="recursion_scale")

    @property
    def spacing_convention(self) -> SpacingConvention:
        return SpacingConvention(self.convention)

    @property
    def profile_truncation(self) -> float:
        if self.tau_t is not None:
            return self.tau_t
        return self.prefix_length if self.prefix_length > 0.0 else math.inf

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        """Serialize as a config file that :func:`load_config` reads back to an equal config."""
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                text = "none"
            elif isinstance(v, tuple):
                text = " ".join(_fmt(x) for x in v)
            elif isinstance(v, bool):
                text = "true" if v else "false"
            elif isinstance(v, float):
                text = _fmt(v)
            else:
                text = str(v)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return f"{v:.17g}" if isinstance(v, float) else str(v)


_PARSERS = {
    "pdp_kind": str.strip,
    "tau_c": float,
    "pdp_table": lambda t: None if t.strip().lower() in ("", "none") else t.strip(),
    "tau_t": _opt_float,
    "bandwidth": float,
    "block_length": float,
    "prefix_length": float,
    "snr": float,
    "coherence_fraction": float,
    "convention": str.strip,
    "trials": lambda t: int(float(t)),
    "seed": int,
    "workers": int,
    "sweep_n": _ints,
    "sweep_bandwidth": _floats,
    "sweep_points": int,
    "sweep_parallel": _bool,
    "n_truncate": _opt_int,
    "a_sq": _opt_float,
    "out": str.strip,
    "recursion_scale": float,
}
KEYS = tuple(_PARSERS)


def parse_value(key: str, text: str, source: str = "override"):
    if key not in _PARSERS:
        raise ConfigError(f"unknown key (from {source})", field=key)
    try:
        return _PARSERS[key](str(text))
    except ValueError as exc:
        raise ConfigError(f"cannot parse {text!r} (from {source}): {exc}", field=key) from None


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", field="config") from None
    values = {}
    for lineno, line in enumerate(raw.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'", field="config")
        key, _, text = line.partition("=")
        key = key.strip().replace("-", "_")
        values[key] = parse_value(key, text, f"{path}:{lineno}")
    if values.get("pdp_table") and not Path(values["pdp_table"]).is_absolute():
        values["pdp_table"] = str(path.parent / values["pdp_table"])
    return values


def read_environment(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    values = {}
    for name, text in environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):].lower()
            if key == "config":
                continue
            values[key] = parse_value(key, text, f"${name}")
    return values


def load_config(path=None, overrides=None, environ=None) -> ExperimentConfig:
    """Build the effective config; ``overrides`` maps keys to strings or typed values."""
    values = {}
    if path is not None:
        values.update(read_config_file(path))
    values.update(read_environment(environ))
    for key, v in (overrides or {}).items():
        values[key] = parse_value(key, v, "command line") if isinstance(v, str) else v
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
