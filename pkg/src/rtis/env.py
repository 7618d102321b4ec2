"""Point-to-point reaching task on the parametric arm.

The plant is kinematic: joint angles integrate the clamped velocity command
with explicit Euler over an interval drawn from the timestep model. The
velocity reported in the observation is the joint displacement divided by the
*nominal* control period, i.e. what a controller ticking at its own fixed rate
sees. Under fixed stepping this equals the applied command; under jitter it
carries the interval noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .arm import ArmModel, forward_kinematics
from .errors import ConfigError, UsageError
from .timestep import Stepper, TimestepModel

OBS_DIM = 19
ACT_DIM = 3

#: heuristic data-collection command: 3e-3 deg every 1 ms on each active joint
P2P_RATE = math.radians(3e-3) / 1e-3


@dataclass(frozen=True)
class EnvConfig:
    r1_gain: float = 2e-5
    r2_gain: float = 1e-6
    epsilon: float = 0.05
    max_steps: int = 200
    goal: tuple[float, float, float] = (0.4, 0.2, 0.5)
    v_max: float = 0.5
    obs_noise_fraction: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "goal", tuple(float(v) for v in self.goal))
        if len(self.goal) != 3:
            raise ConfigError("goal must be a 3-vector")
        if not (self.r1_gain > 0 and self.r2_gain > 0):
            raise ConfigError("reward gains must be positive")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ConfigError("max_steps must be a positive integer")
        if not self.v_max > 0:
            raise ConfigError("v_max must be positive")
        if not self.obs_noise_fraction >= 0:
            raise ConfigError("obs_noise_fraction must be non-negative")

    def to_dict(self) -> dict:
        return {
            "r1_gain": self.r1_gain,
            "r2_gain": self.r2_gain,
            "epsilon": self.epsilon,
            "max_steps": self.max_steps,
            "goal": list(self.goal),
            "v_max": self.v_max,
            "obs_noise_fraction": self.obs_noise_fraction,
        }

    @classmethod
    def from_dict(cls, data: Mapping | None) -> "EnvConfig":
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown env keys: {sorted(unknown)}")
        if "max_steps" in data:
            data["max_steps"] = int(data["max_steps"])
        if "goal" in data:
            data["goal"] = tuple(data["goal"])
        return cls(**data)


@dataclass
class Observation:
    effector: np.ndarray
    theta: np.ndarray
    sin_theta: np.ndarray
    cos_theta: np.ndarray
    velocity: np.ndarray
    goal: np.ndarray
    done: bool = False

    def as_array(self) -> np.ndarray:
        return np.concatenate(
            [
                self.effector,
                self.theta,
                self.sin_theta,
                self.cos_theta,
                self.velocity,
                self.goal,
                [1.0 if self.done else 0.0],
            ]
        )


def is_done(distance: float, step: int, cfg: EnvConfig) -> bool:
    """Terminal flag: ``step`` exceeds the episode length or the goal is within epsilon."""
    return step > cfg.max_steps or distance < cfg.epsilon


def reward(distance: float, action: np.ndarray, cfg: EnvConfig) -> float:
    return -cfg.r1_gain * distance - cfg.r2_gain * float(np.dot(action, action))


def heuristic_p2p_policy(t: int = 0) -> np.ndarray:
    """Constant-velocity command used for data collection (zero joint acceleration)."""
    return np.full(ACT_DIM, P2P_RATE)


@dataclass
class ReachEnv:
    """One reaching episode at a time; owns its stepper and random stream.

    ``step_count`` counts completed steps. An episode holds exactly
    ``max_steps`` transitions unless the goal is reached first: after the
    ``k``-th step the terminal test is applied to step index ``k + 1``, the
    step that would begin next.
    """

    arm: ArmModel = field(default_factory=ArmModel)
    timestep: TimestepModel = field(default_factory=TimestepModel)
    cfg: EnvConfig = field(default_factory=EnvConfig)
    seed: int | np.random.SeedSequence | None = None
    pace: bool = False
    load: float | None = None

    def __post_init__(self):
        self._goal = np.asarray(self.cfg.goal, dtype=float)
        self.seed_streams(self.seed)
        self.theta = np.zeros(3)
        self.velocity = np.zeros(3)
        self.effector = forward_kinematics(self.arm, self.theta)
        self.step_count = 0
        self.done = True
        self.last_dt = 0.0

    def seed_streams(self, seed) -> None:
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        dt_ss, noise_ss = ss.spawn(2)
        self.stepper = Stepper(self.timestep, np.random.default_rng(dt_ss), pace=self.pace)
        self.noise_rng = np.random.default_rng(noise_ss)

    def set_arm(self, arm: ArmModel) -> None:
        self.arm = arm

    def distance(self) -> float:
        return float(np.linalg.norm(self.effector - self._goal))

    def _observe(self) -> Observation:
        velocity = self.velocity.copy()
        frac = self.cfg.obs_noise_fraction
        if frac > 0:
            amp = frac * np.abs(velocity)
            velocity = velocity + self.noise_rng.uniform(-1.0, 1.0, size=3) * amp
        return Observation(
            effector=self.effector.copy(),
            theta=self.theta.copy(),
            sin_theta=np.sin(self.theta),
            cos_theta=np.cos(self.theta),
            velocity=velocity,
            goal=self._goal.copy(),
            done=self.done,
        )

    def reset(self) -> Observation:
        self.theta = np.zeros(3)
        self.velocity = np.zeros(3)
        self.effector = forward_kinematics(self.arm, self.theta)
        self.step_count = 0
        self.done = False
        if self.timestep.variant.value == "wallclock":
            self.stepper.reset_clock()
        return self._observe()

    def step(self, action) -> tuple[Observation, float, bool]:
        if self.done:
            raise UsageError("episode is done; call reset()")
        cmd = np.clip(np.asarray(action, dtype=float), -self.cfg.v_max, self.cfg.v_max)
        if cmd.shape != (ACT_DIM,) or not np.all(np.isfinite(cmd)):
            raise UsageError(f"action must be a finite {ACT_DIM}-vector")
        dt = self.stepper.next_dt(self.load)
        self.last_dt = dt
        new_theta = self.arm.clamp(self.theta + cmd * dt)
        self.velocity = (new_theta - self.theta) / self.timestep.nominal_dt
        self.theta = new_theta
        self.effector = forward_kinematics(self.arm, self.theta)
        self.step_count += 1
        dist = self.distance()
        r = reward(dist, cmd, self.cfg)
        self.done = is_done(dist, self.step_count + 1, self.cfg)
        return self._observe(), r, self.done
