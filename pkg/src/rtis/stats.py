"""Ensemble statistics of repeated trials and their correlation with host load.

For an ensemble of ``N_r`` aligned trials ``s_j(t)`` of length ``N_t``:

* mean signal ``s̄(t) = (1/N_r) Σ_k s_k(t)``
* deviation ``δ_j(t) = s_j(t) - s̄(t)``
* variability band ``σ(t) = sqrt((1/N_r) Σ_j δ_j(t)²)`` (population normalization)
* RMS stochasticity ``Δ_j = sqrt((1/N_t) Σ_t δ_j(t)²)``

Per-trial ``Δ_j`` are correlated with per-trial mean utilization using the
Pearson coefficient, a Student-t score with ``n_df = N_r - 2`` and a
two-tailed p-value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import integrate, signal

from .errors import PreconditionError

SIGNIFICANCE_LEVEL = 0.05


@dataclass(frozen=True)
class TrialSeries:
    channel: str
    values: np.ndarray
    sample_rate: float
    trial_id: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise PreconditionError(f"{self.channel}: series must be a non-empty 1-D array")
        if not np.all(np.isfinite(values)):
            raise PreconditionError(f"{self.channel}: series contains non-finite values")
        if not self.sample_rate > 0:
            raise PreconditionError(f"{self.channel}: sample_rate must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class Ensemble:
    """Aligned repeats of one channel: same name, length and sample rate."""

    trials: tuple[TrialSeries, ...]

    def __post_init__(self):
        trials = tuple(self.trials)
        if not trials:
            raise PreconditionError("an ensemble needs at least one trial")
        first = trials[0]
        for tr in trials[1:]:
            name = tr.trial_id or "<unnamed>"
            if tr.channel != first.channel:
                raise PreconditionError(f"trial {name}: channel {tr.channel!r} differs from {first.channel!r}")
            if len(tr) != len(first):
                raise PreconditionError(f"trial {name}: length {len(tr)} differs from {len(first)}")
            if tr.sample_rate != first.sample_rate:
                raise PreconditionError(f"trial {name}: sample rate {tr.sample_rate} differs from {first.sample_rate}")
        object.__setattr__(self, "trials", trials)

    @classmethod
    def from_array(cls, values, channel: str = "signal", sample_rate: float = 1.0) -> "Ensemble":
        values = np.atleast_2d(np.asarray(values, dtype=float))
        return cls(tuple(TrialSeries(channel, row, sample_rate, f"trial_{i:04d}") for i, row in enumerate(values)))

    @property
    def channel(self) -> str:
        return self.trials[0].channel

    @property
    def n_trials(self) -> int:
        return len(self.trials)

    @property
    def n_steps(self) -> int:
        return len(self.trials[0])

    @property
    def sample_rate(self) -> float:
        return self.trials[0].sample_rate

    def matrix(self) -> np.ndarray:
        return np.vstack([tr.values for tr in self.trials])


@dataclass(frozen=True)
class StochasticityReport:
    channel: str
    mean_signal: np.ndarray
    sigma_band: np.ndarray
    per_trial_delta: np.ndarray
    mean_delta: float


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    t_score: float
    p_value: float
    n_df: int
    signal: str = ""
    resource: str = ""
    significant: bool = field(default=False)

    def cell(self) -> str:
        return f"{self.r:.3f} ({self.p_value:.3f})"


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, TrialSeries) else np.asarray(x, dtype=float)


def mean_signal(e: Ensemble) -> np.ndarray:
    """Elementwise mean over trials.

    Each column sum is correctly rounded (``math.fsum``), so the mean keeps
    full relative accuracy even where trials cancel. Columns whose values all
    agree return that value bit-for-bit.
    """
    m = e.matrix()
    n = m.shape[0]
    if n == 1:
        return m[0].copy()
    mean = np.fromiter((math.fsum(col) for col in m.T), dtype=float, count=m.shape[1]) / n
    same = np.all(m == m[0], axis=0)
    mean[same] = m[0, same]
    return mean


def deviation(trial, mean) -> np.ndarray:
    v = _values(trial)
    mean = np.asarray(mean, dtype=float)
    if v.shape != mean.shape:
        raise PreconditionError(f"trial length {v.shape} does not match mean length {mean.shape}")
    return v - mean


def sigma_band(e: Ensemble) -> np.ndarray:
    m = e.matrix()
    d = m - mean_signal(e)
    return np.sqrt(np.mean(d * d, axis=0))


def rms_delta(trial, mean) -> float:
    d = deviation(trial, mean)
    return float(np.sqrt(np.mean(d * d)))


def stochasticity(e: Ensemble) -> StochasticityReport:
    mean = mean_signal(e)
    deltas = np.array([rms_delta(tr, mean) for tr in e.trials])
    return StochasticityReport(e.channel, mean, sigma_band(e), deltas, float(np.mean(deltas)))


def resource_mean(trace) -> float:
    v = _values(trace)
    if v.size == 0:
        raise PreconditionError("resource trace is empty")
    return float(np.mean(v))


def pearson(x, y) -> float:
    """Pearson correlation coefficient of two equal-length vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise PreconditionError("pearson needs two 1-D vectors of equal length")
    if x.size < 2:
        raise PreconditionError("pearson needs at least two samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise PreconditionError("correlation is undefined for a constant vector")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def t_score(r: float, n_df: int) -> float:
    if n_df < 1:
        raise PreconditionError("t-score needs at least one degree of freedom")
    if not abs(r) < 1.0:
        raise PreconditionError(f"t-score is infinite for |r| = {abs(r)}")
    return r * math.sqrt(n_df) / math.sqrt(1.0 - r * r)


def student_t_density(x: float, n_df: float) -> float:
    log_c = math.lgamma((n_df + 1) / 2) - math.lgamma(n_df / 2) - 0.5 * math.log(n_df * math.pi)
    return math.exp(log_c - (n_df + 1) / 2 * math.log1p(x * x / n_df))


def p_value(t: float, n_df: int) -> float:
    """Two-tailed probability ``P(|T| >= |t|)`` for Student's t with ``n_df`` degrees.

    The density is integrated numerically: the central mass for small ``|t|``
    (so ``t = 0`` gives exactly 1) and the upper tail otherwise, which keeps
    relative accuracy for tiny p-values.
    """
    if n_df < 1:
        raise PreconditionError("p-value needs at least one degree of freedom")
    a = abs(float(t))
    if math.isinf(a):
        return 0.0
    if a <= 1.0:
        central, _ = integrate.quad(student_t_density, 0.0, a, args=(n_df,), epsabs=1e-15, epsrel=1e-13, limit=200)
        p = 1.0 - 2.0 * central
    else:
        tail, _ = integrate.quad(student_t_density, a, math.inf, args=(n_df,), epsabs=0.0, epsrel=1e-12, limit=200)
        p = 2.0 * tail
    return min(1.0, max(0.0, p))


def default_segment(n: int) -> int:
    """Quarter of the series length rounded to the nearest power of two."""
    target = max(n / 4.0, 1.0)
    seg = 2 ** int(round(math.log2(target)))
    while seg > n:
        seg //= 2
    return max(seg, 1)


def psd(series, sample_rate: float | None = None, nperseg: int | None = None):
    """Welch power spectrum: Hann window, 50 % overlap, power-spectrum scaling.

    A unit-amplitude sinusoid centred on a bin shows up as a peak of about 0.5
    (its mean power) at that bin.
    """
    if isinstance(series, TrialSeries):
        values, fs = series.values, series.sample_rate
    else:
        values, fs = np.asarray(series, dtype=float), sample_rate
    if fs is None or not fs > 0:
        raise PreconditionError("psd needs a positive sample rate")
    n = values.size
    if n < 8:
        raise PreconditionError(f"psd needs at least 8 samples, got {n}")
    seg = default_segment(n) if nperseg is None else int(nperseg)
    if seg > n:
        raise PreconditionError(f"series of {n} samples is shorter than one segment ({seg})")
    freqs, power = signal.welch(values, fs=fs, window="hann", nperseg=seg, noverlap=seg // 2,
                                detrend=False, scaling="spectrum")
    return freqs, power


def correlate(x, y, signal_name: str = "", resource_name: str = "", alpha: float = SIGNIFICANCE_LEVEL) -> CorrelationResult:
    x = np.asarray(x, dtype=float)
    r = pearson(x, y)
    n_df = x.size - 2
    if n_df < 1:
        raise PreconditionError("significance needs at least three trials")
    if abs(r) >= 1.0:
        t, p = math.copysign(math.inf, r), 0.0
    else:
        t = t_score(r, n_df)
        p = p_value(t, n_df)
    return CorrelationResult(r, t, p, n_df, signal_name, resource_name, p < alpha)


def correlation_study(deltas: Mapping[str, Sequence[float]], resources: Mapping[str, Sequence[float]],
                      alpha: float = SIGNIFICANCE_LEVEL) -> list[CorrelationResult]:
    """Correlate every stochasticity channel with every resource channel."""
    out = []
    for sname, dvals in deltas.items():
        for rname, rvals in resources.items():
            if len(dvals) != len(rvals):
                raise PreconditionError(f"{sname} has {len(dvals)} trials but {rname} has {len(rvals)}")
            out.append(correlate(dvals, rvals, sname, rname, alpha))
    return out
