"""Run configuration: dataclass, INI-style file parsing and a stable hash.

A config file has up to three sections::

    [run]    algo, env, seed, episodes, out_dir, checkpoint_every, max_updates,
             magnitudes, trials, recovery_horizon, max_onset, push_duration
    [agent]  any AgentConfig field except ``algo``
    [env]    constants of the chosen environment

Unknown sections or keys are rejected.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..agent import ALGOS, AgentConfig
from ..envs import ENV_NAMES, LineWalkerConfig, WalkerConfig


class ConfigError(ValueError):
    pass


GRID_FIELDS = {"n": 5, "slip": 0.1, "max_steps": 50}


def env_defaults(env: str) -> dict:
    if env == "line":
        return asdict(LineWalkerConfig())
    if env == "walker":
        return asdict(WalkerConfig())
    if env == "grid":
        return dict(GRID_FIELDS)
    raise ConfigError(f"unknown env {env!r}; expected one of {ENV_NAMES}")


@dataclass
class RunConfig:
    algo: str = "hdpg"
    env: str = "line"
    seed: int = 0
    episodes: int = 300
    out_dir: str = "runs/default"
    checkpoint_every: int = 500
    max_updates: int = 0                 # 0 = unlimited
    magnitudes: tuple = (6.0, 8.0, 10.0, 12.0, 14.0)
    trials: int = 100
    recovery_horizon: float = 10.0       # s after push onset
    max_onset: float = 5.0               # s
    push_duration: float = 0.2           # s
    agent: dict = field(default_factory=dict)
    env_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        self.magnitudes = tuple(float(m) for m in self.magnitudes)
        self.validate()

    def validate(self):
        if self.algo not in ALGOS:
            raise ConfigError(f"unknown algo {self.algo!r}; expected one of {ALGOS}")
        if self.env not in ENV_NAMES:
            raise ConfigError(f"unknown env {self.env!r}; expected one of {ENV_NAMES}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.episodes < 1:
            raise ConfigError(f"episodes must be >= 1, got {self.episodes}")
        if self.checkpoint_every < 1 or self.max_updates < 0:
            raise ConfigError("checkpoint_every must be >= 1 and max_updates >= 0")
        if any(m < 0 for m in self.magnitudes):
            raise ConfigError(f"push magnitudes must be non-negative, got {self.magnitudes}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.recovery_horizon <= 0 or self.max_onset <= 0 or self.push_duration <= 0:
            raise ConfigError("recovery_horizon, max_onset and push_duration must be positive")
        known = set(AgentConfig.field_names()) - {"algo"}
        bad = sorted(set(self.agent) - known)
        if bad:
            raise ConfigError(f"unknown agent keys {bad}")
        bad = sorted(set(self.env_overrides) - set(env_defaults(self.env)))
        if bad:
            raise ConfigError(f"unknown {self.env} env keys {bad}")
        try:
            self.agent_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def agent_config(self) -> AgentConfig:
        return AgentConfig(algo=self.algo, **self.agent)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def canonical(self) -> dict:
        """Everything that affects results; excludes the output location."""
        agent = asdict(self.agent_config())
        agent["actor_hidden"] = list(agent["actor_hidden"])
        env = env_defaults(self.env)
        env.update(self.env_overrides)
        d = {f.name: getattr(self, f.name) for f in fields(self)
             if f.name not in ("out_dir", "agent", "env_overrides")}
        d["magnitudes"] = list(self.magnitudes)
        d["agent"] = agent
        d["env_config"] = env
        return d

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------- parsing

def _coerce(text: str, default, key: str):
    text = text.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            elem = type(default[0]) if default else float
            return tuple(elem(x) for x in text.replace(",", " ").split())
        return text
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}".replace("\n", " ")) from None
    bad = sorted(set(cp.sections()) - {"run", "agent", "env"})
    if bad:
        raise ConfigError(f"{source}: unknown sections {bad}")

    run_defaults = {f.name: f.default for f in fields(RunConfig)
                    if f.name not in ("agent", "env_overrides")}
    run = {}
    if cp.has_section("run"):
        for key, val in cp.items("run"):
            if key not in run_defaults:
                raise ConfigError(f"{source}: unknown key [run] {key}")
            run[key] = _coerce(val, run_defaults[key], f"[run] {key}")

    agent_defaults = asdict(AgentConfig())
    agent = {}
    if cp.has_section("agent"):
        for key, val in cp.items("agent"):
            if key not in agent_defaults or key == "algo":
                raise ConfigError(f"{source}: unknown key [agent] {key}"
                                  + (" (set algo under [run])" if key == "algo" else ""))
            agent[key] = _coerce(val, agent_defaults[key], f"[agent] {key}")

    env_name = run.get("env", RunConfig.env)
    try:
        defaults = env_defaults(env_name)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    env = {}
    if cp.has_section("env"):
        for key, val in cp.items("env"):
            if key not in defaults:
                raise ConfigError(f"{source}: unknown key [env] {key} for env {env_name}")
            env[key] = _coerce(val, defaults[key], f"[env] {key}")
    return RunConfig(**run, agent=agent, env_overrides=env)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), source=str(path))
