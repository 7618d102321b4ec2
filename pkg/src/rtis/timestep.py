"""Integration-interval sources: fixed, wall-clock and stochastic jitter.

The jitter variant emulates the nondeterministic stepping of a simulator
driven by the operating-system clock. Intervals are lognormal with median
``nominal_dt`` and coefficient of variation ``jitter_cv * (1 + load_coupling * load)``.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ConfigError, PreconditionError, UsageError


class Variant(str, enum.Enum):
    FIXED = "fixed"
    WALLCLOCK = "wallclock"
    JITTER = "jitter"


@dataclass(frozen=True)
class TimestepModel:
    variant: Variant = Variant.FIXED
    nominal_dt: float = 0.025
    jitter_cv: float = 0.0
    load_coupling: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.nominal_dt > 0:
            raise ConfigError(f"nominal_dt must be positive, got {self.nominal_dt}")
        if not self.jitter_cv >= 0:
            raise ConfigError(f"jitter_cv must be non-negative, got {self.jitter_cv}")
        if not self.load_coupling >= 0:
            raise ConfigError(f"load_coupling must be non-negative, got {self.load_coupling}")

    @classmethod
    def fixed(cls, nominal_dt: float = 0.025) -> "TimestepModel":
        return cls(Variant.FIXED, nominal_dt)

    @classmethod
    def jitter(cls, nominal_dt: float = 0.025, cv: float = 0.1, load_coupling: float = 0.0) -> "TimestepModel":
        return cls(Variant.JITTER, nominal_dt, cv, load_coupling)

    @classmethod
    def wallclock(cls, nominal_dt: float = 0.025) -> "TimestepModel":
        return cls(Variant.WALLCLOCK, nominal_dt)

    def effective_cv(self, load: float | None = None) -> float:
        if load is None:
            return self.jitter_cv
        return self.jitter_cv * (1.0 + self.load_coupling * load)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "nominal_dt": self.nominal_dt,
            "jitter_cv": self.jitter_cv,
            "load_coupling": self.load_coupling,
        }

    @classmethod
    def from_dict(cls, data: Mapping | None) -> "TimestepModel":
        data = dict(data or {})
        unknown = set(data) - {"variant", "nominal_dt", "jitter_cv", "load_coupling"}
        if unknown:
            raise ConfigError(f"unknown timestep keys: {sorted(unknown)}")
        try:
            variant = Variant(str(data.get("variant", "fixed")).lower())
        except ValueError as exc:
            raise ConfigError(f"unknown timestep variant {data.get('variant')!r}") from exc
        return cls(
            variant,
            float(data.get("nominal_dt", 0.025)),
            float(data.get("jitter_cv", 0.0)),
            float(data.get("load_coupling", 0.0)),
        )


def _check_load(load):
    if load is not None and not 0.0 <= load <= 1.0:
        raise PreconditionError(f"load must be in [0, 1], got {load}")


def lognormal_sigma(cv: float) -> float:
    """Log-space standard deviation giving coefficient of variation ``cv``."""
    return math.sqrt(math.log1p(cv * cv))


def next_dt(model: TimestepModel, rng: np.random.Generator | None = None, load: float | None = None) -> float:
    """Draw one interval from a stateless (fixed or jitter) model."""
    _check_load(load)
    if model.variant is Variant.FIXED:
        return model.nominal_dt
    if model.variant is Variant.WALLCLOCK:
        raise UsageError("wall-clock intervals need a Stepper instance")
    cv = model.effective_cv(load)
    if cv == 0.0:
        return model.nominal_dt
    if rng is None:
        raise UsageError("jitter intervals need a random stream")
    return model.nominal_dt * math.exp(lognormal_sigma(cv) * rng.standard_normal())


def sample_dts(model: TimestepModel, rng: np.random.Generator | None, n: int, load: float | None = None) -> np.ndarray:
    """Vector of ``n`` intervals; same distribution as repeated :func:`next_dt`."""
    _check_load(load)
    if model.variant is Variant.WALLCLOCK:
        raise UsageError("wall-clock intervals cannot be pre-sampled")
    cv = model.effective_cv(load) if model.variant is Variant.JITTER else 0.0
    if cv == 0.0:
        return np.full(n, model.nominal_dt)
    if rng is None:
        raise UsageError("jitter intervals need a random stream")
    return model.nominal_dt * np.exp(lognormal_sigma(cv) * rng.standard_normal(n))


class Stepper:
    """Stateful interval source owned by a single stepping loop.

    For the wall-clock variant each call returns the monotonic time elapsed
    since the previous call; the first call after construction or
    :meth:`reset_clock` returns ``nominal_dt``. With ``pace=True`` the stepper
    sleeps until at least ``nominal_dt`` has passed since the previous call,
    so the loop runs in real time and the measured interval carries the
    scheduler's jitter.
    """

    def __init__(self, model: TimestepModel, rng: np.random.Generator | None = None, pace: bool = False):
        self.model = model
        self.rng = rng
        self.pace = pace
        self._last = time.perf_counter()
        self._fresh = True
        self._floor = time.get_clock_info("perf_counter").resolution

    def reset_clock(self) -> None:
        if self.model.variant is not Variant.WALLCLOCK:
            raise UsageError("reset_clock only applies to the wall-clock variant")
        self._last = time.perf_counter()
        self._fresh = True

    def next_dt(self, load: float | None = None) -> float:
        if self.model.variant is not Variant.WALLCLOCK:
            return next_dt(self.model, self.rng, load)
        _check_load(load)
        if self._fresh:
            self._last = time.perf_counter()
            self._fresh = False
            return self.model.nominal_dt
        if self.pace:
            deadline = self._last + self.model.nominal_dt
            remaining = deadline - time.perf_counter()
            if remaining > 0:
                time.sleep(remaining)
        now = time.perf_counter()
        elapsed = now - self._last
        self._last = now
        return max(elapsed, self._floor)
