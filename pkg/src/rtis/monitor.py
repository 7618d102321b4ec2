"""Background sampling of host CPU / memory (and optionally GPU) utilization.

Providers return one reading per call and ``None`` once exhausted. The first
reading is taken synchronously by :func:`start_sampling`; a daemon thread
takes the rest every ``period`` seconds until :func:`stop_sampling`.
"""

from __future__ import annotations

import itertools
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import PreconditionError, ProviderUnavailable, UsageError
from .stats import TrialSeries

CHANNELS = {"cpu": "cpu_pct", "memory": "mem_pct", "gpu": "gpu_pct"}
DEFAULT_PERIOD = 0.1


@dataclass(frozen=True)
class ResourceSample:
    timestamp: float
    cpu: float
    memory: float
    gpu: float | None = None

    def __post_init__(self):
        for name in ("cpu", "memory", "gpu"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 100.0:
                raise PreconditionError(f"{name} utilization {v} outside [0, 100]")


class NullProvider:
    kind = "null"

    def open(self) -> None:
        pass

    def read(self):
        return None


class SyntheticProvider:
    """Replays a scripted sequence of readings; memory defaults to the cpu script."""

    kind = "synthetic"

    def __init__(self, cpu: Sequence[float], memory: Sequence[float] | None = None,
                 gpu: Sequence[float] | None = None, cycle: bool = False):
        self.cpu = [float(v) for v in cpu]
        self.memory = [float(v) for v in memory] if memory is not None else list(self.cpu)
        self.gpu = [float(v) for v in gpu] if gpu is not None else None
        if len(self.memory) != len(self.cpu) or (self.gpu is not None and len(self.gpu) != len(self.cpu)):
            raise PreconditionError("synthetic scripts must have equal lengths")
        self.cycle = cycle
        self._it: Iterable | None = None

    def open(self) -> None:
        rows = list(zip(self.cpu, self.memory, self.gpu or [None] * len(self.cpu)))
        self._it = itertools.cycle(rows) if (self.cycle and rows) else iter(rows)

    def read(self):
        if self._it is None:
            self.open()
        return next(self._it, None)


class HostProvider:
    """Live host utilization via psutil; ``gpu_reader`` is an optional hook returning a percentage."""

    kind = "host"

    def __init__(self, gpu_reader: Callable[[], float | None] | None = None):
        self.gpu_reader = gpu_reader
        self._psutil = None

    def open(self) -> None:
        try:
            import psutil

            psutil.cpu_percent(interval=None)  # primes the delta counter
            psutil.virtual_memory()
        except Exception as exc:
            raise ProviderUnavailable(f"host metrics unreadable: {exc}") from exc
        self._psutil = psutil

    def read(self):
        if self._psutil is None:
            self.open()
        ps = self._psutil
        gpu = None
        if self.gpu_reader is not None:
            try:
                gpu = self.gpu_reader()
            except Exception:
                gpu = None
        return (float(ps.cpu_percent(interval=None)), float(ps.virtual_memory().percent), gpu)


def make_provider(kind: str, script: Sequence[float] | None = None):
    if kind == "host":
        return HostProvider()
    if kind == "null":
        return NullProvider()
    if kind == "synthetic":
        return SyntheticProvider(script or [], cycle=True)
    raise PreconditionError(f"unknown provider kind {kind!r}")


@dataclass
class ResourceTrace:
    samples: list = field(default_factory=list)
    period: float = DEFAULT_PERIOD

    @property
    def empty(self) -> bool:
        return not self.samples

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([s.timestamp for s in self.samples])

    def channel(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples if getattr(s, name) is not None], dtype=float)

    def available(self) -> list[str]:
        names = ["cpu", "memory"]
        if self.samples and all(s.gpu is not None for s in self.samples):
            names.append("gpu")
        return names if self.samples else []

    def series(self) -> dict[str, TrialSeries]:
        """One series per available channel, keyed by its trial-log column name."""
        if self.empty:
            raise PreconditionError("resource trace holds no samples")
        return {CHANNELS[n]: TrialSeries(CHANNELS[n], self.channel(n), 1.0 / self.period) for n in self.available()}


class SamplingHandle:
    def __init__(self, provider, period: float):
        self.provider = provider
        self.period = period
        self.trace = ResourceTrace(period=period)
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._active = True

    @property
    def latest(self) -> ResourceSample | None:
        with self._lock:
            return self.trace.samples[-1] if self.trace.samples else None

    def _take(self) -> bool:
        reading = self.provider.read()
        if reading is None:
            return False
        cpu, mem, gpu = reading
        now = time.perf_counter()
        with self._lock:
            if self.trace.samples and now <= self.trace.samples[-1].timestamp:
                now = np.nextafter(self.trace.samples[-1].timestamp, np.inf)
            self.trace.samples.append(ResourceSample(now, cpu, mem, gpu))
        return True

    def _run(self) -> None:
        while not self._stop.wait(self.period):
            if not self._take():
                break


def start_sampling(provider, period: float = DEFAULT_PERIOD) -> SamplingHandle:
    if not period > 0:
        raise PreconditionError("sampling period must be positive")
    provider.open()
    handle = SamplingHandle(provider, period)
    if handle._take():
        handle._thread = threading.Thread(target=handle._run, name="rtis-resource-sampler", daemon=True)
        handle._thread.start()
    return handle


def stop_sampling(handle: SamplingHandle) -> ResourceTrace:
    if not handle._active:
        raise UsageError("sampling handle already stopped")
    handle._active = False
    handle._stop.set()
    if handle._thread is not None:
        handle._thread.join()
    return handle.trace
