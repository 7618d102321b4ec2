"""Structured-text (YAML) configuration.

Every section is optional and every missing key takes its default::

    arm:                     # meters / radians
      link1_length: 0.3
      link2_length: 0.3
      base_height: 0.2
      joint_lower: [-3.14159, -3.14159, -3.14159]
      joint_upper: [3.14159, 3.14159, 3.14159]
    timestep:
      variant: fixed         # fixed | wallclock | jitter
      nominal_dt: 0.025      # seconds
      jitter_cv: 0.0
      load_coupling: 0.0
    env:
      r1_gain: 2.0e-5
      r2_gain: 1.0e-6
      epsilon: 0.05          # meters
      max_steps: 200
      goal: [0.4, 0.2, 0.5]  # meters from the base
      v_max: 0.5             # rad/s
      obs_noise_fraction: 0.0
    ppo:                     # see rtis.ppo.PPOConfig
      epochs: 1000
      ...
    collect:
      n_trials: 50
      duration: 10.0         # seconds of simulated time
      nominal_dt: 0.001      # 1 kHz command rate
      provider: host         # host | synthetic | null
      period: 0.1            # resource sampling cadence, seconds
      synthetic_cpu: []      # per-trial constant level for the synthetic provider
      inject_load: 0.0       # upper bound of the per-trial spin-load duty cycle
      home: [0.0, 0.0, 0.0]
      pace: false            # wallclock only: sleep to run in real time
    eval:
      n_trials: 100
      preset: matched        # matched | sim2real
      jitter_cv: 0.1         # sim2real preset
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping

import yaml

from .arm import ArmModel
from .env import EnvConfig
from .errors import ConfigError
from .ppo import PPOConfig
from .timestep import TimestepModel


@dataclass(frozen=True)
class CollectConfig:
    n_trials: int = 50
    duration: float = 10.0
    nominal_dt: float = 0.001
    provider: str = "host"
    period: float = 0.1
    synthetic_cpu: tuple = ()
    inject_load: float = 0.0
    home: tuple = (0.0, 0.0, 0.0)
    pace: bool = False

    def __post_init__(self):
        object.__setattr__(self, "synthetic_cpu", tuple(float(v) for v in self.synthetic_cpu))
        object.__setattr__(self, "home", tuple(float(v) for v in self.home))
        if int(self.n_trials) < 1:
            raise ConfigError("collect.n_trials must be at least 1")
        if not self.duration > 0 or not self.nominal_dt > 0:
            raise ConfigError("collect.duration and collect.nominal_dt must be positive")
        if self.provider not in ("host", "synthetic", "null"):
            raise ConfigError(f"unknown provider {self.provider!r}")
        if not self.period > 0:
            raise ConfigError("collect.period must be positive")
        if not 0.0 <= self.inject_load <= 1.0:
            raise ConfigError("collect.inject_load must be in [0, 1]")
        if len(self.home) != 3:
            raise ConfigError("collect.home must have 3 joint angles")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.nominal_dt))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["synthetic_cpu"] = list(self.synthetic_cpu)
        d["home"] = list(self.home)
        return d


@dataclass(frozen=True)
class EvalConfig:
    n_trials: int = 100
    preset: str = "matched"
    jitter_cv: float = 0.1

    def __post_init__(self):
        if int(self.n_trials) < 1:
            raise ConfigError("eval.n_trials must be at least 1")
        if self.preset not in ("matched", "sim2real"):
            raise ConfigError(f"unknown eval preset {self.preset!r}")
        if not self.jitter_cv >= 0:
            raise ConfigError("eval.jitter_cv must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Config:
    arm: ArmModel = field(default_factory=ArmModel)
    timestep: TimestepModel = field(default_factory=TimestepModel)
    env: EnvConfig = field(default_factory=EnvConfig)
    ppo: PPOConfig = field(default_factory=PPOConfig)
    collect: CollectConfig = field(default_factory=CollectConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def to_dict(self) -> dict:
        return {
            "arm": self.arm.to_dict(),
            "timestep": self.timestep.to_dict(),
            "env": self.env.to_dict(),
            "ppo": self.ppo.to_dict(),
            "collect": self.collect.to_dict(),
            "eval": self.eval.to_dict(),
        }


def _section(data: Mapping, name: str) -> dict:
    sec = data.get(name)
    if sec is None:
        return {}
    if not isinstance(sec, Mapping):
        raise ConfigError(f"section {name!r} must be a mapping")
    return dict(sec)


def _simple(cls, sec: dict, name: str):
    unknown = set(sec) - set(cls.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown {name} keys: {sorted(unknown)}")
    return cls(**sec)


def config_from_dict(data: Mapping | None) -> Config:
    data = dict(data or {})
    unknown = set(data) - {"arm", "timestep", "env", "ppo", "collect", "eval"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    try:
        return Config(
            arm=ArmModel.from_dict(_section(data, "arm")),
            timestep=TimestepModel.from_dict(_section(data, "timestep")),
            env=EnvConfig.from_dict(_section(data, "env")),
            ppo=PPOConfig.from_dict(_section(data, "ppo")),
            collect=_simple(CollectConfig, _section(data, "collect"), "collect"),
            eval=_simple(EvalConfig, _section(data, "eval"), "eval"),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if data is not None and not isinstance(data, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data)
