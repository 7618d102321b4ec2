"""Parametric 3-DoF arm: yaw base, shoulder and elbow.

The arm stands in for the three active joints of a larger manipulator with
every other joint frozen at zero. Only the two link lengths are randomization
targets; the closed-form kinematics are

    x = cos(q1) * (L1 cos(q2) + L2 cos(q2 + q3))
    y = sin(q1) * (L1 cos(q2) + L2 cos(q2 + q3))
    z = h + L1 sin(q2) + L2 sin(q2 + q3)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, PreconditionError

N_JOINTS = 3

#: relative link-length offsets of the deliberately imprecise model
MISMATCH_SHORTEN = 0.0004
MISMATCH_LENGTHEN = 0.0004


def _default_lower() -> tuple[float, float, float]:
    return (-math.pi,) * N_JOINTS


def _default_upper() -> tuple[float, float, float]:
    return (math.pi,) * N_JOINTS


@dataclass(frozen=True)
class ArmModel:
    link1_length: float = 0.3
    link2_length: float = 0.3
    base_height: float = 0.2
    joint_lower: tuple[float, float, float] = field(default_factory=_default_lower)
    joint_upper: tuple[float, float, float] = field(default_factory=_default_upper)

    def __post_init__(self):
        object.__setattr__(self, "joint_lower", tuple(float(v) for v in self.joint_lower))
        object.__setattr__(self, "joint_upper", tuple(float(v) for v in self.joint_upper))
        if len(self.joint_lower) != N_JOINTS or len(self.joint_upper) != N_JOINTS:
            raise ConfigError(f"joint limits must have {N_JOINTS} entries")
        if not (self.link1_length > 0 and self.link2_length > 0):
            raise ConfigError("link lengths must be strictly positive")
        if not self.base_height >= 0:
            raise ConfigError("base_height must be non-negative")
        for i, (lo, hi) in enumerate(zip(self.joint_lower, self.joint_upper)):
            if not lo < hi:
                raise ConfigError(f"joint {i}: lower limit {lo} must be below upper {hi}")

    @property
    def reach(self) -> float:
        return self.link1_length + self.link2_length

    def within_limits(self, q: Sequence[float]) -> bool:
        return all(lo <= v <= hi for v, lo, hi in zip(q, self.joint_lower, self.joint_upper))

    def clamp(self, q: np.ndarray) -> np.ndarray:
        """Clip joint angles into the closed limit box."""
        return np.clip(q, self.joint_lower, self.joint_upper)

    def to_dict(self) -> dict:
        return {
            "link1_length": self.link1_length,
            "link2_length": self.link2_length,
            "base_height": self.base_height,
            "joint_lower": list(self.joint_lower),
            "joint_upper": list(self.joint_upper),
        }

    @classmethod
    def from_dict(cls, data: Mapping | None) -> "ArmModel":
        """Build a model from config keys; absent keys keep their defaults."""
        data = dict(data or {})
        known = {"link1_length", "link2_length", "base_height", "joint_lower", "joint_upper"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown arm keys: {sorted(unknown)}")
        kwargs = {}
        for key in ("link1_length", "link2_length", "base_height"):
            if key in data:
                kwargs[key] = float(data[key])
        for key in ("joint_lower", "joint_upper"):
            if key in data:
                kwargs[key] = tuple(float(v) for v in data[key])
        return cls(**kwargs)


def forward_kinematics(model: ArmModel, q: Sequence[float]) -> np.ndarray:
    """End-effector position for joint angles ``q`` (radians), in meters."""
    if len(q) != N_JOINTS:
        raise PreconditionError(f"expected {N_JOINTS} joint angles, got {len(q)}")
    q1, q2, q3 = (float(v) for v in q)
    if not all(math.isfinite(v) for v in (q1, q2, q3)):
        raise PreconditionError("joint angles must be finite")
    if not model.within_limits((q1, q2, q3)):
        raise PreconditionError(f"joint angles {q1, q2, q3} outside limits")
    planar = model.link1_length * math.cos(q2) + model.link2_length * math.cos(q2 + q3)
    return np.array(
        [
            math.cos(q1) * planar,
            math.sin(q1) * planar,
            model.base_height + model.link1_length * math.sin(q2) + model.link2_length * math.sin(q2 + q3),
        ]
    )


def sample_randomized_model(base: ArmModel, fraction: float, rng: np.random.Generator) -> ArmModel:
    """Scale each link length by an independent factor in ``[1 - fraction, 1 + fraction]``."""
    if not 0 <= fraction < 1:
        raise ConfigError(f"randomization fraction must be in [0, 1), got {fraction}")
    if fraction == 0:
        return base
    s1, s2 = rng.uniform(1.0 - fraction, 1.0 + fraction, size=2)
    return replace(base, link1_length=base.link1_length * s1, link2_length=base.link2_length * s2)


def mismatched_model(base: ArmModel) -> ArmModel:
    """First link 0.04 % shorter, second 0.04 % longer.

    Not idempotent: applying it twice compounds the offsets.
    """
    return replace(
        base,
        link1_length=base.link1_length * (1.0 - MISMATCH_SHORTEN),
        link2_length=base.link2_length * (1.0 + MISMATCH_LENGTHEN),
    )
