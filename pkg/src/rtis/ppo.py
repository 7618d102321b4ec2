"""Clipped-surrogate PPO with GAE for the five reaching agents.

Agent variants differ only in how the training environment is built:

=======  ==========================  ==========  =================
tag      kinematic model             timesteps   velocity obs noise
=======  ==========================  ==========  =================
NA_P     nominal                     fixed       none
NA_I     mismatched (-/+0.04 %)      fixed       none
KRA      resampled +/-1 % / episode  fixed       none
KRA_IS   resampled +/-1 % / episode  jitter      none
KORA     resampled +/-1 % / episode  fixed       5 %
=======  ==========================  ==========  =================
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from . import kernels
from .arm import ArmModel, mismatched_model, sample_randomized_model
from .env import ACT_DIM, OBS_DIM, EnvConfig, ReachEnv
from .errors import ConfigError, PreconditionError
from .nn import MLP, Adam, GaussianPolicy, gaussian_log_prob
from .timestep import TimestepModel, Variant


@dataclass(frozen=True)
class PPOConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_ratio: float = 0.2
    epochs: int = 1000
    episodes_per_epoch: int = 5
    steps_per_episode: int = 200
    update_iters: int = 10
    minibatch: int = 250
    lr: float = 3e-4
    value_coeff: float = 0.5
    entropy_coeff: float = 0.0
    max_grad_norm: float = 0.5
    reward_scale: float = 1e4
    init_log_std: float = -1.0
    hidden: tuple[int, int] = (128, 64)
    nominal_dt: float = 0.025
    seed: int = 0
    realtime: bool = False  # KRA_IS steps on the paced wall clock instead of emulated jitter

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if not 0 < self.gamma <= 1:
            raise ConfigError("gamma must be in (0, 1]")
        if not 0 <= self.gae_lambda <= 1:
            raise ConfigError("gae_lambda must be in [0, 1]")
        if not self.clip_ratio > 0:
            raise ConfigError("clip_ratio must be positive")
        for name in ("epochs", "episodes_per_epoch", "steps_per_episode", "update_iters", "minibatch"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if not self.lr > 0:
            raise ConfigError("lr must be positive")
        if not self.reward_scale > 0:
            raise ConfigError("reward_scale must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, data: Mapping | None) -> "PPOConfig":
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown ppo keys: {sorted(unknown)}")
        for name, f in cls.__dataclass_fields__.items():
            if name in data and f.type in ("int", int):
                data[name] = int(data[name])
        if "hidden" in data:
            data["hidden"] = tuple(data["hidden"])
        return cls(**data)


class AgentTag(str, enum.Enum):
    NA_P = "NA_P"
    NA_I = "NA_I"
    KRA = "KRA"
    KRA_IS = "KRA_IS"
    KORA = "KORA"


def parse_tag(tag) -> AgentTag:
    """Accepts enum members and case/dash variants such as ``"kra-is"``."""
    if isinstance(tag, AgentTag):
        return tag
    return AgentTag(str(tag).upper().replace("-", "_"))


class ModelSource(str, enum.Enum):
    NOMINAL = "nominal"
    MISMATCHED = "mismatched"
    RESAMPLED = "resampled-per-episode"


KINEMATIC_RANDOM_FRACTION = 0.01
OBS_NOISE_FRACTION = 0.05
DEFAULT_TRAIN_JITTER_CV = 0.1


@dataclass(frozen=True)
class AgentVariant:
    tag: AgentTag
    kinematic_random_fraction: float
    obs_noise_fraction: float
    timestep_variant: Variant
    model_source: ModelSource
    jitter_cv: float = 0.0

    @classmethod
    def from_tag(cls, tag, jitter_cv: float = DEFAULT_TRAIN_JITTER_CV) -> "AgentVariant":
        tag = parse_tag(tag)
        table = {
            AgentTag.NA_P: (0.0, 0.0, Variant.FIXED, ModelSource.NOMINAL),
            AgentTag.NA_I: (0.0, 0.0, Variant.FIXED, ModelSource.MISMATCHED),
            AgentTag.KRA: (KINEMATIC_RANDOM_FRACTION, 0.0, Variant.FIXED, ModelSource.RESAMPLED),
            AgentTag.KRA_IS: (KINEMATIC_RANDOM_FRACTION, 0.0, Variant.JITTER, ModelSource.RESAMPLED),
            AgentTag.KORA: (KINEMATIC_RANDOM_FRACTION, OBS_NOISE_FRACTION, Variant.FIXED, ModelSource.RESAMPLED),
        }
        frac, noise, ts, source = table[tag]
        return cls(tag, frac, noise, ts, source, jitter_cv if ts is Variant.JITTER else 0.0)

    def timestep_model(self, nominal_dt: float, realtime: bool = False) -> TimestepModel:
        if self.timestep_variant is Variant.JITTER and realtime:
            return TimestepModel.wallclock(nominal_dt)
        if self.timestep_variant is Variant.JITTER:
            return TimestepModel.jitter(nominal_dt, self.jitter_cv)
        return TimestepModel(self.timestep_variant, nominal_dt)

    def episode_model(self, base: ArmModel, rng: np.random.Generator) -> ArmModel:
        if self.model_source is ModelSource.NOMINAL:
            return base
        if self.model_source is ModelSource.MISMATCHED:
            return mismatched_model(base)
        return sample_randomized_model(base, self.kinematic_random_fraction, rng)

    def to_dict(self) -> dict:
        return {
            "tag": self.tag.value,
            "kinematic_random_fraction": self.kinematic_random_fraction,
            "obs_noise_fraction": self.obs_noise_fraction,
            "timestep_variant": self.timestep_variant.value,
            "model_source": self.model_source.value,
            "jitter_cv": self.jitter_cv,
        }


@dataclass
class TrainingMetrics:
    r_ini: float
    r_ult: float
    t_hlf: float
    r_time: float
    curve: np.ndarray = field(repr=False)
    wall_time: float = 0.0

    def row(self) -> dict:
        return {"R_ini": self.r_ini, "R_ult": self.r_ult, "T_hlf": self.t_hlf, "r_time": self.r_time}


# -- advantage estimation ---------------------------------------------------

def compute_gae(rewards, values, terminal: bool, gamma: float, lam: float):
    """GAE(lambda) advantages and returns for one episode.

    ``values`` has one more entry than ``rewards``: the bootstrap value of the
    state after the last step, ignored (treated as zero) when ``terminal``.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (rewards.shape[0] + 1,):
        raise PreconditionError(f"values must have length {rewards.shape[0] + 1}, got {values.shape}")
    adv = kernels.gae(rewards, values, bool(terminal), float(gamma), float(lam))
    return adv, adv + values[:-1]


def clipped_surrogate(ratio, adv, clip: float) -> np.ndarray:
    """Per-sample ``min(ratio * A, clip(ratio, 1 - clip, 1 + clip) * A)``."""
    ratio = np.asarray(ratio, dtype=float)
    adv = np.asarray(adv, dtype=float)
    return np.minimum(ratio * adv, np.clip(ratio, 1.0 - clip, 1.0 + clip) * adv)


# -- update -----------------------------------------------------------------

@dataclass
class Batch:
    obs: np.ndarray
    actions: np.ndarray  # raw (pre-clamp) samples
    logp: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray

    def __len__(self) -> int:
        return self.obs.shape[0]


def _clip_global_norm(grads, max_norm):
    if max_norm is None or max_norm <= 0:
        return grads
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        grads = [g * scale for g in grads]
    return grads


def policy_loss_and_grads(policy: GaussianPolicy, obs, actions, old_logp, adv, clip: float, entropy_coeff: float):
    """Negative clipped surrogate (minus entropy bonus) and its parameter gradients."""
    n = obs.shape[0]
    mu, cache = policy.mean_net.forward_cached(obs)
    logp = gaussian_log_prob(actions, mu, policy.log_std)
    ratio = np.exp(logp - old_logp)
    surr = clipped_surrogate(ratio, adv, clip)
    loss = -float(np.mean(surr)) - entropy_coeff * policy.entropy()
    # the min picks the unclipped branch exactly where its gradient flows
    unclipped = ratio * adv <= np.clip(ratio, 1.0 - clip, 1.0 + clip) * adv
    w = np.where(unclipped, ratio * adv, 0.0) / n
    inv_var = np.exp(-2.0 * policy.log_std)
    diff = actions - mu
    g_mu = -(w[:, None] * diff * inv_var)
    g_log_std = -np.sum(w[:, None] * (diff * diff * inv_var - 1.0), axis=0) - entropy_coeff
    grads, _ = policy.mean_net.backward(cache, g_mu)
    diag = {
        "mean_ratio": float(np.mean(ratio)),
        "clip_frac": float(np.mean(np.abs(ratio - 1.0) > clip)),
        "approx_kl": float(np.mean(old_logp - logp)),
    }
    return loss, grads + [g_log_std], diag


def value_loss_and_grads(value_net: MLP, obs, returns, coeff: float):
    v, cache = value_net.forward_cached(obs)
    err = v[:, 0] - returns
    loss = coeff * float(np.mean(err * err))
    g = (2.0 * coeff / obs.shape[0]) * err[:, None]
    grads, _ = value_net.backward(cache, g)
    return loss, grads


class Learner:
    """Policy, critic and their optimizers: the single writer during updates."""

    def __init__(self, cfg: PPOConfig, obs_dim: int = OBS_DIM, act_dim: int = ACT_DIM):
        init_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 7]))
        self.cfg = cfg
        self.policy = GaussianPolicy(obs_dim, act_dim, cfg.hidden, init_rng, cfg.init_log_std)
        self.value_net = MLP((obs_dim, *cfg.hidden, 1), init_rng, output_gain=1.0)
        self.pi_opt = Adam(self.policy.params(), lr=cfg.lr)
        self.v_opt = Adam(self.value_net.params(), lr=cfg.lr)
        self.shuffle_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 11, 0]))

    def snapshot(self):
        return ([p.copy() for p in self.policy.params()], [p.copy() for p in self.value_net.params()],
                self.pi_opt.state(), self.v_opt.state())

    def restore(self, snap) -> None:
        pp, vp, ps, vs = snap
        for dst, src in zip(self.policy.params(), pp):
            dst[...] = src
        for dst, src in zip(self.value_net.params(), vp):
            dst[...] = src
        self.pi_opt.load_state(ps)
        self.v_opt.load_state(vs)


def ppo_update(learner: Learner, batch: Batch, cfg: PPOConfig | None = None) -> dict:
    """Run ``update_iters`` passes of minibatch PPO on ``batch``.

    Advantages are normalized over the batch. On a non-finite loss or gradient
    every parameter and optimizer moment is restored and ``FloatingPointError``
    is raised.
    """
    cfg = cfg or learner.cfg
    n = len(batch)
    adv = batch.advantages - batch.advantages.mean()
    std = adv.std()
    if std > 1e-12:
        adv = adv / std
    snap = learner.snapshot()
    mb = min(int(cfg.minibatch), n)
    diags = []
    try:
        for _ in range(cfg.update_iters):
            order = learner.shuffle_rng.permutation(n)
            for start in range(0, n, mb):
                idx = order[start:start + mb]
                lp, gp, d = policy_loss_and_grads(
                    learner.policy, batch.obs[idx], batch.actions[idx], batch.logp[idx], adv[idx],
                    cfg.clip_ratio, cfg.entropy_coeff,
                )
                lv, gv = value_loss_and_grads(learner.value_net, batch.obs[idx], batch.returns[idx], cfg.value_coeff)
                if not (math.isfinite(lp) and math.isfinite(lv)):
                    raise FloatingPointError("non-finite PPO loss")
                learner.pi_opt.step(_clip_global_norm(gp, cfg.max_grad_norm))
                learner.policy.clip_log_std()
                learner.v_opt.step(_clip_global_norm(gv, cfg.max_grad_norm))
                d.update(policy_loss=lp, value_loss=lv)
                diags.append(d)
    except FloatingPointError:
        learner.restore(snap)
        raise
    out = {k: float(np.mean([d[k] for d in diags])) for k in diags[0]}
    post = np.exp(learner.policy.log_prob(batch.obs, batch.actions) - batch.logp)
    out["post_ratio_within"] = float(np.mean(np.abs(post - 1.0) <= 2 * cfg.clip_ratio))
    return out


# -- rollouts and training --------------------------------------------------

EnvFactory = Callable[..., ReachEnv]


def default_env_factory(arm: ArmModel, timestep: TimestepModel, cfg: EnvConfig, seed) -> ReachEnv:
    return ReachEnv(arm=arm, timestep=timestep, cfg=cfg, seed=seed, pace=timestep.variant is Variant.WALLCLOCK)


def _episode_seed(seed: int, epoch: int, episode: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, epoch, episode])


def collect_epoch(learner: Learner, variant: AgentVariant, cfg: PPOConfig, env_cfg: EnvConfig, base_arm: ArmModel,
                  epoch: int, act_rng: np.random.Generator, env_factory: EnvFactory = default_env_factory):
    """Roll out ``episodes_per_epoch`` episodes in lockstep with the current policy.

    Returns the training batch and the raw (unscaled) return of each episode.
    """
    env_cfg = replace(env_cfg, max_steps=cfg.steps_per_episode, obs_noise_fraction=variant.obs_noise_fraction)
    ts = variant.timestep_model(cfg.nominal_dt, cfg.realtime)
    envs, obs = [], []
    for ep in range(cfg.episodes_per_epoch):
        ss = _episode_seed(cfg.seed, epoch, ep)
        model_ss, env_ss = ss.spawn(2)
        arm = variant.episode_model(base_arm, np.random.default_rng(model_ss))
        env = env_factory(arm, ts, env_cfg, env_ss)
        envs.append(env)
        obs.append(env.reset().as_array())
    n_env = len(envs)
    traj = [{"obs": [], "act": [], "logp": [], "rew": []} for _ in range(n_env)]
    terminal = [False] * n_env
    last_obs = [None] * n_env
    active = list(range(n_env))
    std = np.exp(learner.policy.log_std)
    bound = env_cfg.v_max
    while active:
        o = np.stack([obs[i] for i in active])
        mu = learner.policy.mean(o)
        raw = mu + std * act_rng.standard_normal(mu.shape)
        logp = gaussian_log_prob(raw, mu, learner.policy.log_std)
        still = []
        for row, i in enumerate(active):
            nobs, r, done = envs[i].step(np.clip(raw[row], -bound, bound))
            t = traj[i]
            t["obs"].append(obs[i])
            t["act"].append(raw[row])
            t["logp"].append(logp[row])
            t["rew"].append(r)
            obs[i] = nobs.as_array()
            if done:
                terminal[i] = envs[i].distance() < env_cfg.epsilon
                last_obs[i] = obs[i]
            else:
                still.append(i)
        active = still
    parts = {k: [] for k in ("obs", "act", "logp", "adv", "ret")}
    ep_returns = []
    for i, t in enumerate(traj):
        ob = np.asarray(t["obs"])
        rew = np.asarray(t["rew"])
        ep_returns.append(float(rew.sum()))
        v = learner.value_net.forward(np.vstack([ob, last_obs[i][None, :]]))[:, 0]
        adv, ret = compute_gae(rew * cfg.reward_scale, v, terminal[i], cfg.gamma, cfg.gae_lambda)
        parts["obs"].append(ob)
        parts["act"].append(np.asarray(t["act"]))
        parts["logp"].append(np.asarray(t["logp"]))
        parts["adv"].append(adv)
        parts["ret"].append(ret)
    batch = Batch(
        np.concatenate(parts["obs"]), np.concatenate(parts["act"]), np.concatenate(parts["logp"]),
        np.concatenate(parts["adv"]), np.concatenate(parts["ret"]),
    )
    return batch, ep_returns


def training_metrics(curve, wall_time: float, baseline_time: float) -> TrainingMetrics:
    """Initial/ultimate window means, halfway-convergence percentage and time ratio.

    Windows cover ``ceil(10 %)`` of the epochs. ``t_hlf`` is the 1-based index
    of the first epoch whose reward reaches halfway between the two window
    means, as a percentage of all epochs.
    """
    curve = np.asarray(curve, dtype=float)
    if curve.size == 0:
        raise PreconditionError("learning curve is empty")
    if not baseline_time > 0:
        raise PreconditionError("baseline_time must be positive")
    n = curve.size
    w = max(1, math.ceil(0.1 * n))
    r_ini = float(np.mean(curve[:w]))
    r_ult = float(np.mean(curve[-w:]))
    threshold = r_ini + 0.5 * (r_ult - r_ini)
    if r_ult >= r_ini:
        hits = np.nonzero(curve >= threshold)[0]
    else:
        hits = np.nonzero(curve <= threshold)[0]
    first = int(hits[0]) if hits.size else n - 1
    return TrainingMetrics(r_ini, r_ult, 100.0 * (first + 1) / n, wall_time / baseline_time, curve, wall_time)


@dataclass
class TrainResult:
    learner: Learner
    metrics: TrainingMetrics
    diagnostics: list


def train(variant: AgentVariant, cfg: PPOConfig, env_factory: EnvFactory = default_env_factory,
          env_cfg: EnvConfig | None = None, base_arm: ArmModel | None = None, baseline_time: float | None = None,
          learner: Learner | None = None, start_epoch: int = 0, curve=None,
          on_epoch: Callable[[int, float, float, Learner], None] | None = None) -> TrainResult:
    """Train one agent; ``learner``/``start_epoch``/``curve`` resume a run.

    ``on_epoch(epoch, mean_return, elapsed, learner)`` is called after every
    update, e.g. to stream the curve and write checkpoints.
    """
    env_cfg = env_cfg or EnvConfig()
    base_arm = base_arm or ArmModel()
    learner = learner or Learner(cfg)
    curve = [] if curve is None else [float(c) for c in curve]
    diags = []
    t0 = time.perf_counter()
    for epoch in range(start_epoch, cfg.epochs):
        # per-epoch streams make a resumed run identical to an uninterrupted one
        act_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 3, epoch]))
        learner.shuffle_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 11, epoch]))
        batch, returns = collect_epoch(learner, variant, cfg, env_cfg, base_arm, epoch, act_rng, env_factory)
        diags.append(ppo_update(learner, batch, cfg))
        curve.append(float(np.mean(returns)))
        if on_epoch is not None:
            on_epoch(epoch, curve[-1], time.perf_counter() - t0, learner)
    wall = time.perf_counter() - t0
    metrics = training_metrics(curve, wall, baseline_time if baseline_time else max(wall, 1e-9))
    return TrainResult(learner, metrics, diags)
