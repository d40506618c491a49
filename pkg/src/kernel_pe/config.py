"""Experiment configuration: flat ``key = value`` files with ``#`` comments.

Every key has a default, so an empty file is a valid configuration::

    # LSTD actor-critic on the noisy chain
    method = lstd
    architecture = actor-critic
    chain_slip = 0.2
    seeds = 0, 1, 2, 3, 4
"""

from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

__all__ = ["ExperimentConfig", "ConfigError", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending line when known."""


@dataclass
class ExperimentConfig:
    method: str = "lspe"
    architecture: str = "opi"
    env: str = "chain"
    gamma: float = 0.99
    lam: float = 0.5
    sigma2: float = 0.1
    eta: float = 0.5
    eta_schedule: str = "constant"
    eta_c: float = 100.0
    epsilon: float = 0.01
    h: float = 5.0
    tol1: float = 0.1
    tol2: float = 0.0
    batch_size: int = 20  # 0 = whole remaining list per step
    max_transitions: int = 10000
    max_episode_steps: int = 200
    window: int = 20
    bucket: int = 500
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    output: str = "runs"
    record_wallclock: bool = False
    chain_n: int = 5
    chain_slip: float = 0.2
    chain_random_start: bool = True
    nav_noise: float = 0.03
    nav_goal_radius: float = 0.15
    nav_step: float = 0.1

    def validate(self, lines: dict | None = None) -> "ExperimentConfig":
        lines = lines or {}

        def fail(key, msg):
            where = f"line {lines[key]}: " if key in lines else ""
            raise ConfigError(f"{where}{key}: {msg}")

        if self.method not in ("brm", "lstd", "lspe"):
            fail("method", f"unknown method {self.method!r}")
        if self.architecture not in ("opi", "actor-critic"):
            fail("architecture", f"unknown architecture {self.architecture!r}")
        if self.env not in ("chain", "nav2d"):
            fail("env", f"unknown environment {self.env!r}")
        if self.architecture == "opi" and self.method == "lstd":
            fail("method", "lstd cannot drive optimistic policy iteration; use actor-critic")
        if self.architecture == "actor-critic" and self.method != "lstd":
            fail("method", "actor-critic uses the lstd critic")
        if self.method == "brm" and not self.deterministic_env:
            fail("method", "brm is only valid on deterministic environments "
                           "(set chain_slip = 0 with env = chain)")
        if not 0.0 < self.gamma < 1.0:
            fail("gamma", "must lie in (0, 1)")
        if not 0.0 <= self.lam <= 1.0:
            fail("lam", "must lie in [0, 1]")
        for key in ("sigma2", "h", "eta"):
            if not getattr(self, key) > 0:
                fail(key, "must be positive")
        for key in ("tol1", "tol2", "epsilon", "max_transitions", "batch_size"):
            if getattr(self, key) < 0:
                fail(key, "must be non-negative")
        if self.epsilon > 1:
            fail("epsilon", "must lie in [0, 1]")
        if self.eta_schedule not in ("constant", "harmonic"):
            fail("eta_schedule", "expected constant or harmonic")
        if not self.seeds:
            fail("seeds", "need at least one seed")
        if self.max_episode_steps < 1 or self.window < 1 or self.bucket < 1:
            fail("max_episode_steps" if self.max_episode_steps < 1 else
                 "window" if self.window < 1 else "bucket", "must be at least 1")
        if not (self.chain_slip == 0.0 or 0.0 < self.chain_slip < 0.5):
            fail("chain_slip", "must be 0 or in (0, 0.5)")
        return self

    @property
    def deterministic_env(self) -> bool:
        return self.env == "chain" and self.chain_slip == 0.0

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes).validate()

    def to_text(self) -> str:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = ", ".join(str(s) for s in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            out.append(f"{f.name} = {v}")
        return "\n".join(out) + "\n"


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _convert(key: str, raw: str):
    kind = _TYPES[key]
    if kind == "float":
        return float(raw)
    if kind == "int":
        return int(raw)
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "list":
        return [int(s) for s in re.split(r"[,\s]+", raw.strip()) if s]
    return raw.strip()


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text; raise :class:`ConfigError` with a line number."""
    parser = configparser.ConfigParser(comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
                                       interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + text)
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] - 1 if exc.errors else "?"
        raise ConfigError(f"line {lineno}: cannot parse {exc.errors[0][1].strip()!r}") from None
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        where = f"line {lineno - 1}: " if lineno else ""
        raise ConfigError(f"{where}{exc.message.splitlines()[0]}") from None
    lines = {}
    for i, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*([A-Za-z_][\w-]*)\s*[=:]", line)
        if m:
            lines[m.group(1)] = i
    values = {}
    for key, raw in parser["config"].items():
        if key not in _TYPES:
            where = f"line {lines[key]}: " if key in lines else ""
            raise ConfigError(f"{where}unknown key {key!r}")
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            where = f"line {lines[key]}: " if key in lines else ""
            raise ConfigError(f"{where}{key}: {exc}") from None
    return ExperimentConfig(**values).validate(lines)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())
