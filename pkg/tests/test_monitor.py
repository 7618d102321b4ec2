import time

import numpy as np
import pytest

from rtis.errors import PreconditionError, UsageError
from rtis.monitor import (HostProvider, NullProvider, ResourceSample, SyntheticProvider, make_provider,
                          start_sampling, stop_sampling)
from rtis.stats import resource_mean


def _wait_exhausted(handle, timeout=2.0):
    t0 = time.perf_counter()
    while handle._thread is not None and handle._thread.is_alive() and time.perf_counter() - t0 < timeout:
        time.sleep(0.005)


def test_synthetic_replay_exact():
    h = start_sampling(SyntheticProvider([10, 20, 30]), period=0.01)
    _wait_exhausted(h)
    trace = stop_sampling(h)
    assert list(trace.channel("cpu")) == [10, 20, 30]
    s = trace.series()
    assert len(s["cpu_pct"]) == 3 and s["cpu_pct"].sample_rate == pytest.approx(100.0)
    assert np.all(np.diff(trace.timestamps) > 0)


def test_synthetic_gpu_channel():
    h = start_sampling(SyntheticProvider([1, 2], memory=[3, 4], gpu=[5, 6]), period=0.01)
    _wait_exhausted(h)
    trace = stop_sampling(h)
    assert trace.available() == ["cpu", "memory", "gpu"]
    assert list(trace.channel("gpu")) == [5, 6] and list(trace.channel("memory")) == [3, 4]


def test_null_provider_empty_trace():
    trace = stop_sampling(start_sampling(NullProvider(), period=0.01))
    assert trace.empty and trace.available() == []
    with pytest.raises(PreconditionError):
        trace.series()
    with pytest.raises(PreconditionError):
        resource_mean(trace.channel("cpu"))


def test_first_sample_is_synchronous():
    h = start_sampling(SyntheticProvider([42], cycle=True), period=10.0)
    assert h.latest is not None and h.latest.cpu == 42
    assert len(stop_sampling(h)) == 1


def test_host_provider_bounds_and_cadence():
    h = start_sampling(HostProvider(), period=0.1)
    time.sleep(1.0)
    trace = stop_sampling(h)
    assert 9 <= len(trace) <= 12
    cpu = trace.channel("cpu")
    assert np.all((cpu >= 0) & (cpu <= 100))
    assert np.all((trace.channel("memory") > 0) & (trace.channel("memory") <= 100))


def test_host_gpu_hook_failure_is_tolerated():
    def broken():
        raise RuntimeError("no device")

    cpu, mem, gpu = HostProvider(gpu_reader=broken).read()
    assert gpu is None


def test_double_stop_is_usage_error():
    h = start_sampling(NullProvider(), 0.01)
    stop_sampling(h)
    with pytest.raises(UsageError):
        stop_sampling(h)


def test_invalid_inputs():
    with pytest.raises(PreconditionError):
        start_sampling(NullProvider(), period=0)
    with pytest.raises(PreconditionError):
        ResourceSample(0.0, 120.0, 10.0)
    with pytest.raises(PreconditionError):
        SyntheticProvider([1, 2], memory=[1])
    with pytest.raises(PreconditionError):
        make_provider("gpu-only")
    assert make_provider("synthetic", [5]).read() == (5.0, 5.0, None)
