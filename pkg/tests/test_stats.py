import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats as sps

from rtis.errors import PreconditionError
from rtis.stats import (Ensemble, TrialSeries, correlate, correlation_study, default_segment, deviation, mean_signal,
                        p_value, pearson, psd, resource_mean, rms_delta, sigma_band, stochasticity, t_score)


def E(rows):
    return Ensemble.from_array(rows)


def test_mean_examples():
    np.testing.assert_array_equal(mean_signal(E([[1, 1], [3, 3]])), [2, 2])
    np.testing.assert_array_equal(mean_signal(E([[4, 5, 6]])), [4, 5, 6])


def test_deviation_examples():
    np.testing.assert_array_equal(deviation([3, 3], [2, 2]), [1, 1])
    np.testing.assert_array_equal(deviation([2, 2], [2, 2]), [0, 0])
    with pytest.raises(PreconditionError):
        deviation([1, 2, 3], [1, 2])


def test_sigma_examples():
    np.testing.assert_array_equal(sigma_band(E([[1, 1], [3, 3]])), [1, 1])
    np.testing.assert_array_equal(sigma_band(E([[0.1, 0.7]] * 4)), [0, 0])
    np.testing.assert_array_equal(sigma_band(E([[5, 6]])), [0, 0])


def test_rms_examples():
    assert rms_delta([1, 1], [0, 0]) == 1.0
    assert rms_delta([3, 4], [0, 0]) == pytest.approx(math.sqrt(12.5), rel=1e-15)
    assert rms_delta([2, 2], [2, 2]) == 0.0


def test_resource_mean_examples():
    assert resource_mean([50.0] * 7) == 50.0
    assert resource_mean([0, 100]) == 50.0
    with pytest.raises(PreconditionError):
        resource_mean([])


ensembles = st.integers(1, 8).flatmap(lambda r: st.integers(1, 40).flatmap(
    lambda t: arrays(np.float64, (r, t), elements=st.floats(-1e3, 1e3, allow_nan=False))))


@settings(max_examples=100, deadline=None)
@given(ensembles)
def test_deviations_sum_to_zero(m):
    e = E(m)
    mu = mean_signal(e)
    total = sum(deviation(tr, mu) for tr in e.trials)
    np.testing.assert_allclose(total, 0.0, atol=1e-10 * max(1.0, np.abs(m).max()) * m.shape[0])


@settings(max_examples=100, deadline=None)
@given(ensembles)
def test_identical_trials_have_exactly_zero_delta(m):
    row = m[0]
    rep = stochasticity(E(np.tile(row, (4, 1))))
    assert np.all(rep.per_trial_delta == 0.0) and np.all(rep.sigma_band == 0.0)


@settings(max_examples=100, deadline=None)
@given(ensembles)
def test_sigma_is_rms_of_deltas_over_time(m):
    # mean over t of sigma(t)^2 equals mean over j of Delta_j^2
    rep = stochasticity(E(m))
    lhs = np.mean(rep.sigma_band ** 2)
    rhs = np.mean(rep.per_trial_delta ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(ensembles, st.floats(-100, 100), st.floats(0.1, 10))
def test_delta_affine_equivariance(m, shift, scale):
    a = stochasticity(E(m)).per_trial_delta
    b = stochasticity(E(m * scale + shift)).per_trial_delta
    np.testing.assert_allclose(b, a * scale, rtol=1e-7, atol=1e-7 * scale * (1 + abs(shift)))


def test_ensemble_guards():
    a = TrialSeries("v", np.ones(5), 100.0, "t0")
    with pytest.raises(PreconditionError, match="t1"):
        Ensemble((a, TrialSeries("v", np.ones(4), 100.0, "t1")))
    with pytest.raises(PreconditionError, match="t2"):
        Ensemble((a, TrialSeries("v", np.ones(5), 50.0, "t2")))
    with pytest.raises(PreconditionError):
        TrialSeries("v", [1.0, np.nan], 1.0)
    with pytest.raises(PreconditionError):
        Ensemble(())


def test_pearson_examples():
    assert pearson([1, 2, 3], [2, 4, 6]) == 1.0
    assert pearson([1, 2, 3], [3, 2, 1]) == -1.0
    assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == 0.8
    with pytest.raises(PreconditionError):
        pearson([1, 1, 1], [1, 2, 3])


def test_pearson_rational_oracle():
    x, y = [1, 2, 3, 4], [1, 3, 2, 4]
    mx, my = Fraction(sum(x), 4), Fraction(sum(y), 4)
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    assert cov * cov / (sxx * syy) == Fraction(16, 25) and cov > 0


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 60), st.integers(0, 2**32 - 1))
def test_pearson_matches_scipy(n, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal(n), rng.standard_normal(n)
    assert pearson(x, y) == pytest.approx(sps.pearsonr(x, y)[0], abs=1e-12)


def test_t_score_examples():
    assert t_score(0.0, 10) == 0.0
    assert t_score(0.8, 2) == pytest.approx(1.885618, rel=1e-6)


def test_p_value_examples():
    assert p_value(0.0, 5) == 1.0
    assert p_value(12.706, 1) == pytest.approx(0.05, abs=1e-3)
    assert p_value(1.96, 10_000) == pytest.approx(0.05, abs=2e-3)
    assert p_value(math.inf, 3) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.floats(-40, 40), st.integers(1, 500))
def test_p_value_matches_scipy(t, n):
    ref = 2 * sps.t.sf(abs(t), n)
    assert p_value(t, n) == pytest.approx(ref, rel=1e-7, abs=1e-12)


def test_p_value_monotone_in_t():
    ps = [p_value(t, 8) for t in np.linspace(0, 10, 101)]
    assert all(a > b for a, b in zip(ps, ps[1:]))


def test_correlate_flags():
    res = correlate([1, 2, 3, 4, 5], [1, 2, 3, 4, 5], "velocity_1", "cpu_pct")
    assert res.r == 1.0 and res.p_value == 0.0 and res.significant and res.n_df == 3
    res = correlate([1, 2, 3, 4], [1, 3, 2, 4])
    assert res.cell() == "0.800 (0.200)"
    assert not res.significant
    with pytest.raises(PreconditionError):
        correlate([1, 2], [2, 1])


def test_correlation_study_pairs():
    rng = np.random.default_rng(0)
    out = correlation_study({"a": rng.random(10), "b": rng.random(10)}, {"cpu": rng.random(10)})
    assert [(c.signal, c.resource) for c in out] == [("a", "cpu"), ("b", "cpu")]
    with pytest.raises(PreconditionError):
        correlation_study({"a": [1, 2, 3]}, {"cpu": [1, 2]})


def test_psd_sine_peak_and_scaling():
    fs, n = 1000.0, 4096
    t = np.arange(n) / fs
    x = np.sin(2 * np.pi * 10 * t)
    f, p = psd(x, fs)
    assert abs(f[np.argmax(p)] - 10.0) <= f[1] - f[0]
    _, p2 = psd(2 * x, fs)
    assert p2.max() == pytest.approx(4 * p.max(), rel=1e-12)
    f0, p0 = psd(np.zeros(n), fs)
    assert np.all(p0 == 0)


def test_psd_matches_manual_welch():
    # hand-rolled periodogram averaging as the oracle
    rng = np.random.default_rng(3)
    x = rng.standard_normal(512)
    seg = 128
    w = np.hanning(seg + 1)[:-1]
    starts = range(0, len(x) - seg + 1, seg // 2)
    specs = []
    for s in starts:
        X = np.fft.rfft(x[s:s + seg] * w)
        P = np.abs(X) ** 2 / w.sum() ** 2
        P[1:-1] *= 2
        specs.append(P)
    f, p = psd(x, 100.0)
    np.testing.assert_allclose(p, np.mean(specs, axis=0), rtol=1e-10)
    np.testing.assert_allclose(f, np.fft.rfftfreq(seg, 1 / 100.0))


def test_default_segment():
    assert default_segment(4096) == 1024
    assert default_segment(10_000) == 2048
    assert default_segment(8) == 2
    with pytest.raises(PreconditionError):
        psd(np.zeros(4), 10.0)
    with pytest.raises(PreconditionError):
        psd(np.zeros(64), 10.0, nperseg=128)
