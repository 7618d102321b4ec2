import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings, strategies as st

from rtis.arm import ArmModel, mismatched_model
from rtis.errors import ConfigError, PreconditionError
from rtis.nn import GaussianPolicy
from rtis.ppo import (AgentTag, AgentVariant, Batch, Learner, ModelSource, PPOConfig, clipped_surrogate,
                      collect_epoch, compute_gae, policy_loss_and_grads, ppo_update, train, training_metrics)
from rtis.timestep import Variant

TINY = PPOConfig(epochs=2, episodes_per_epoch=1, steps_per_episode=5, hidden=(8, 8), minibatch=5, update_iters=2)


def discounted(rewards, gamma, tail=0.0):
    out, acc = [], tail
    for r in reversed(rewards):
        acc = r + gamma * acc
        out.append(acc)
    return np.array(out[::-1])


def test_gae_two_step_example():
    adv, ret = compute_gae([1.0, 1.0], [0.0, 0.0, 0.0], True, 1.0, 1.0)
    np.testing.assert_array_equal(adv, [2.0, 1.0])
    np.testing.assert_array_equal(ret, [2.0, 1.0])


def test_gae_zero():
    adv, _ = compute_gae(np.zeros(7), np.zeros(8), False, 0.99, 0.95)
    assert np.all(adv == 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_gae_lambda_one_is_discounted_return(seed, terminal):
    rng = np.random.default_rng(seed)
    r, v = rng.standard_normal(30), rng.standard_normal(31)
    adv, ret = compute_gae(r, v, terminal, 0.97, 1.0)
    np.testing.assert_allclose(ret, discounted(r, 0.97, 0.0 if terminal else v[-1]), rtol=1e-10, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_gae_lambda_zero_is_td_residual(seed, terminal):
    rng = np.random.default_rng(seed)
    r, v = rng.standard_normal(30), rng.standard_normal(31)
    nxt = v[1:].copy()
    if terminal:
        nxt[-1] = 0.0
    adv, _ = compute_gae(r, v, terminal, 0.9, 0.0)
    np.testing.assert_allclose(adv, r + 0.9 * nxt - v[:-1], rtol=1e-12, atol=1e-12)


def test_gae_length_check():
    with pytest.raises(PreconditionError):
        compute_gae([1.0, 2.0], [0.0, 0.0], True, 0.9, 0.9)


def test_clipped_surrogate_examples():
    assert clipped_surrogate([2.0], [1.0], 0.2)[0] == pytest.approx(1.2)
    assert clipped_surrogate([0.5], [-1.0], 0.2)[0] == pytest.approx(-0.8)
    adv = np.array([0.3, -1.2, 2.0])
    assert clipped_surrogate(np.ones(3), adv, 0.2).mean() == pytest.approx(adv.mean())


def _loss_case(rng, n=16):
    pol = GaussianPolicy(5, 2, hidden=(6,), rng=rng, init_log_std=-0.5)
    obs = rng.standard_normal((n, 5))
    act = pol.mean(obs) + 0.5 * rng.standard_normal((n, 2))
    old = pol.log_prob(obs, act) + 0.3 * rng.standard_normal(n)
    adv = rng.standard_normal(n)
    return pol, obs, act, old, adv


def test_policy_grads_match_finite_differences(rng):
    pol, obs, act, old, adv = _loss_case(rng)
    _, grads, _ = policy_loss_and_grads(pol, obs, act, old, adv, 0.2, 0.01)
    h = 1e-6
    for p, g in zip(pol.params(), grads):
        for i in np.ndindex(p.shape):
            x = p[i]
            p[i] = x + h
            fp, _, _ = policy_loss_and_grads(pol, obs, act, old, adv, 0.2, 0.01)
            p[i] = x - h
            fm, _, _ = policy_loss_and_grads(pol, obs, act, old, adv, 0.2, 0.01)
            p[i] = x
            assert g[i] == pytest.approx((fp - fm) / (2 * h), rel=1e-4, abs=1e-8)


def test_zero_advantage_zero_policy_grad(rng):
    pol, obs, act, old, _ = _loss_case(rng)
    _, grads, _ = policy_loss_and_grads(pol, obs, act, old, np.zeros(len(obs)), 0.2, 0.0)
    assert all(np.all(g == 0) for g in grads)


@pytest.mark.parametrize("tag,frac,noise,ts,src", [
    ("NA_P", 0.0, 0.0, Variant.FIXED, ModelSource.NOMINAL),
    ("NA_I", 0.0, 0.0, Variant.FIXED, ModelSource.MISMATCHED),
    ("KRA", 0.01, 0.0, Variant.FIXED, ModelSource.RESAMPLED),
    ("KRA-IS", 0.01, 0.0, Variant.JITTER, ModelSource.RESAMPLED),
    ("kora", 0.01, 0.05, Variant.FIXED, ModelSource.RESAMPLED),
])
def test_variant_table(tag, frac, noise, ts, src):
    v = AgentVariant.from_tag(tag)
    assert (v.kinematic_random_fraction, v.obs_noise_fraction, v.timestep_variant, v.model_source) == \
        (frac, noise, ts, src)


def test_variant_episode_models(rng):
    base = ArmModel()
    assert AgentVariant.from_tag("NA_P").episode_model(base, rng) == base
    assert AgentVariant.from_tag("NA_I").episode_model(base, rng) == mismatched_model(base)
    assert AgentVariant.from_tag("KRA").episode_model(base, rng) != base
    assert AgentVariant.from_tag("KRA_IS").timestep_model(0.025).jitter_cv == 0.1


def test_training_metrics_hand_example():
    m = training_metrics([-10, -10, -8, -8, -6, -6, -4, -4, -2, -2], 5.0, 5.0)
    assert (m.r_ini, m.r_ult, m.t_hlf, m.r_time) == (-10.0, -2.0, 50.0, 1.0)


def test_training_metrics_flat_and_decreasing():
    assert training_metrics([-3.0] * 10, 1.0, 2.0).t_hlf == 10.0
    assert training_metrics([-3.0] * 10, 1.0, 2.0).r_time == 0.5
    m = training_metrics([0, 0, -1, -1, -2, -2, -3, -3, -4, -4], 1.0, 1.0)
    assert m.t_hlf == 50.0
    with pytest.raises(PreconditionError):
        training_metrics([], 1.0, 1.0)


def test_tiny_schedule_runs_and_repeats():
    a = train(AgentVariant.from_tag("NA_P"), TINY)
    b = train(AgentVariant.from_tag("NA_P"), TINY)
    assert len(a.metrics.curve) == 2
    assert np.array_equal(a.metrics.curve, b.metrics.curve)
    for x, y in zip(a.learner.policy.params(), b.learner.policy.params()):
        assert np.array_equal(x, y)


def test_resume_matches_uninterrupted():
    cfg = replace(TINY, epochs=4)
    full = train(AgentVariant.from_tag("KRA_IS"), cfg)
    first = train(AgentVariant.from_tag("KRA_IS"), replace(cfg, epochs=2))
    rest = train(AgentVariant.from_tag("KRA_IS"), cfg, learner=first.learner, start_epoch=2,
                 curve=first.metrics.curve)
    assert np.array_equal(full.metrics.curve, rest.metrics.curve)


def test_collect_epoch_shapes():
    cfg = replace(TINY, episodes_per_epoch=3, steps_per_episode=7)
    learner = Learner(cfg)
    from rtis.env import EnvConfig

    batch, returns = collect_epoch(learner, AgentVariant.from_tag("KORA"), cfg, EnvConfig(), ArmModel(), 0,
                                   np.random.default_rng(0))
    assert len(batch) == 21 and len(returns) == 3
    assert batch.obs.shape == (21, 19) and batch.actions.shape == (21, 3)
    assert all(r < 0 for r in returns)


def test_update_keeps_ratio_near_one():
    cfg = replace(TINY, episodes_per_epoch=2, steps_per_episode=50, minibatch=25, update_iters=4)
    learner = Learner(cfg)
    from rtis.env import EnvConfig

    batch, _ = collect_epoch(learner, AgentVariant.from_tag("NA_P"), cfg, EnvConfig(), ArmModel(), 0,
                             np.random.default_rng(1))
    d = ppo_update(learner, batch, cfg)
    assert d["post_ratio_within"] > 0.9
    assert abs(d["approx_kl"]) < 0.1


def test_update_restores_state_on_nan():
    learner = Learner(TINY)
    before = [p.copy() for p in learner.policy.params()]
    n = 5
    bad = Batch(np.full((n, 19), np.nan), np.zeros((n, 3)), np.zeros(n), np.ones(n), np.zeros(n))
    with pytest.raises(FloatingPointError):
        ppo_update(learner, bad, TINY)
    assert all(np.array_equal(a, b) for a, b in zip(before, learner.policy.params()))


def test_config_validation():
    with pytest.raises(ConfigError):
        PPOConfig(gamma=1.5)
    with pytest.raises(ConfigError):
        PPOConfig.from_dict({"batch": 3})
    assert PPOConfig.from_dict(TINY.to_dict()) == TINY


def test_realtime_mode_paces_kra_is():
    cfg = replace(TINY, realtime=True, nominal_dt=0.01)
    v = AgentVariant.from_tag("KRA_IS")
    assert v.timestep_model(0.01, realtime=True).variant is Variant.WALLCLOCK
    assert AgentVariant.from_tag("KRA").timestep_model(0.01, realtime=True).variant is Variant.FIXED
    res = train(v, cfg)
    # each 5-step episode waits on the clock for the 4 steps after the first
    assert res.metrics.wall_time >= 2 * 4 * 0.01 * 0.99
