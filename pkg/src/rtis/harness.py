"""End-to-end experiments: data collection, stochasticity analysis, agent
training, evaluation and cross-run reports. Every function writes into a run
directory laid out as described in :mod:`rtis.store`.
"""

from __future__ import annotations

import logging
import math
import multiprocessing as mp
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, kernels
from .arm import ArmModel, mismatched_model
from .config import CollectConfig, Config, EvalConfig
from .env import EnvConfig, ReachEnv, heuristic_p2p_policy
from .errors import PreconditionError, TrialFormatError
from .monitor import CHANNELS, HostProvider, NullProvider, SyntheticProvider, start_sampling, stop_sampling
from .nn import load_checkpoint, save_checkpoint
from .ppo import AgentTag, AgentVariant, parse_tag, Learner, PPOConfig, TrainingMetrics, train, training_metrics
from .stats import correlate, psd, resource_mean, sigma_band, stochasticity
from .store import (RunLayout, TrialRecord, config_hash, read_csv, read_json, read_trials, trial_paths,
                    write_csv, write_json, write_trial, ensemble_from_records)
from .timestep import Stepper, TimestepModel, Variant, sample_dts

log = logging.getLogger(__name__)

RESOURCE_COLUMNS = tuple(CHANNELS.values())


def code_version() -> str:
    return f"rtis {__version__} ({kernels.BACKEND} kernels)"


def write_manifest(layout: RunLayout, command: str, config: dict, seed: int, extra: dict | None = None) -> str:
    h = config_hash(config)
    write_json(layout.manifest, {
        "command": command,
        "config": config,
        "config_hash": h,
        "seed": seed,
        "code_version": code_version(),
        **(extra or {}),
    })
    return h


# -- load injection ---------------------------------------------------------

def _spin(duty: float, stop, slice_s: float = 0.01) -> None:
    while not stop.is_set():
        t0 = time.perf_counter()
        while time.perf_counter() - t0 < duty * slice_s:
            pass
        time.sleep(max(0.0, (1.0 - duty) * slice_s))


class LoadInjector:
    """Spin-loop processes, one per core, busy for ``duty`` of every 10 ms slice."""

    def __init__(self, duty: float, n_procs: int | None = None):
        if not 0.0 <= duty <= 1.0:
            raise PreconditionError("load duty cycle must be in [0, 1]")
        self.duty = duty
        self.n_procs = n_procs or (os.cpu_count() or 1)
        self._procs = []
        self._stop = None

    def __enter__(self):
        if self.duty > 0:
            ctx = mp.get_context("fork") if hasattr(os, "fork") else mp.get_context()
            self._stop = ctx.Event()
            self._procs = [ctx.Process(target=_spin, args=(self.duty, self._stop), daemon=True)
                           for _ in range(self.n_procs)]
            for p in self._procs:
                p.start()
        return self

    def __exit__(self, *exc):
        if self._stop is not None:
            self._stop.set()
            for p in self._procs:
                p.join(timeout=2.0)
                if p.is_alive():
                    p.terminate()
        self._procs = []
        return False


# -- collect ----------------------------------------------------------------

TRAJECTORY_CHANNELS = (
    ["time", "dt"]
    + [f"theta_{j}" for j in (1, 2, 3)]
    + [f"velocity_{j}" for j in (1, 2, 3)]
    + [f"command_{j}" for j in (1, 2, 3)]
    + ["effector_x", "effector_y", "effector_z"]
)


def trial_id(index: int) -> str:
    return f"trial_{index:04d}"


def _provider_for_trial(cc: CollectConfig, index: int):
    if cc.provider == "host":
        return HostProvider()
    if cc.provider == "null":
        return NullProvider()
    level = cc.synthetic_cpu[index % len(cc.synthetic_cpu)] if cc.synthetic_cpu else 0.0
    return SyntheticProvider([level], cycle=True)


def _hold_on_timeline(trace, t_start: float, t_end: float, n: int) -> dict:
    """Zero-order hold of resource samples onto the ``n`` step instants.

    Step ``k`` is placed at ``t_start + (k + 1) / n * (t_end - t_start)``;
    steps before the first sample take the first sample's value.
    """
    ts = trace.timestamps
    step_t = t_start + (np.arange(1, n + 1) / n) * max(t_end - t_start, 0.0)
    idx = np.clip(np.searchsorted(ts, step_t, side="right") - 1, 0, len(ts) - 1)
    out = {}
    for name in trace.available():
        out[CHANNELS[name]] = trace.channel(name)[idx]
    return out


def run_trial(index: int, cfg: Config, seed: int, injected: float = 0.0) -> TrialRecord:
    """One heuristic constant-velocity trial with resource sampling."""
    cc = cfg.collect
    model = replace(cfg.timestep, nominal_dt=cc.nominal_dt)
    arm = cfg.arm
    n = cc.n_steps
    home = np.asarray(cc.home, dtype=float)
    if not arm.within_limits(home):
        raise PreconditionError(f"collect.home {cc.home} outside the arm's joint limits")
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    cmd = heuristic_p2p_policy()
    provider = _provider_for_trial(cc, index)
    with LoadInjector(injected):
        handle = start_sampling(provider, cc.period)
        first = handle.latest
        load = first.cpu / 100.0 if (first is not None and model.load_coupling > 0) else None
        t_start = time.perf_counter()
        if model.variant is Variant.WALLCLOCK:
            stepper = Stepper(model, rng, pace=cc.pace)
            dts = np.array([stepper.next_dt() for _ in range(n)])
        else:
            dts = sample_dts(model, rng, n, load)
        q, vel, ee = kernels.rollout_constant_velocity(
            arm.link1_length, arm.link2_length, arm.base_height, arm.joint_lower, arm.joint_upper,
            home, cmd, dts, model.nominal_dt)
        t_end = time.perf_counter()
        trace = stop_sampling(handle)
    channels = {"time": np.cumsum(dts), "dt": dts}
    for j in range(3):
        channels[f"theta_{j + 1}"] = q[:, j]
    for j in range(3):
        channels[f"velocity_{j + 1}"] = vel[:, j]
    for j in range(3):
        channels[f"command_{j + 1}"] = np.full(n, cmd[j])
    for j, axis in enumerate("xyz"):
        channels[f"effector_{axis}"] = ee[:, j]
    if not trace.empty:
        channels.update(_hold_on_timeline(trace, t_start, t_end, n))
    meta = {
        "timestep": model.to_dict(),
        "arm": arm.to_dict(),
        "load": load,
        "injected_load": injected,
        "resource_samples": len(trace),
        "resources_empty": trace.empty,
    }
    return TrialRecord(trial_id(index), channels, 1.0 / model.nominal_dt, "p2p", seed, "", meta)


def _collect_one(args):
    index, cfg, seed, injected, h, out = args
    rec = run_trial(index, cfg, seed, injected)
    rec.config_hash = h
    write_trial(rec, Path(out) / (rec.trial_id + ".log"))
    return rec.trial_id


def collect(cfg: Config, out, seed: int = 0, workers: int = 1) -> list[Path]:
    """Run ``collect.n_trials`` heuristic trials, skipping trial ids already on disk."""
    layout = RunLayout(out)
    cc = cfg.collect
    h = write_manifest(layout, "collect", cfg.to_dict(), seed)
    layout.trials.mkdir(parents=True, exist_ok=True)
    load_rng = np.random.default_rng(np.random.SeedSequence([seed, 99]))
    duties = load_rng.uniform(0.0, cc.inject_load, size=cc.n_trials) if cc.inject_load > 0 else np.zeros(cc.n_trials)
    jobs = []
    for i in range(cc.n_trials):
        path = layout.trials / (trial_id(i) + ".log")
        if path.exists():
            log.info("skipping existing %s", path.name)
            continue
        jobs.append((i, cfg, seed, float(duties[i]), h, layout.trials))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers, mp_context=mp.get_context("fork")) as ex:
            list(ex.map(_collect_one, jobs))
    else:
        for job in jobs:
            _collect_one(job)
    return trial_paths(layout.trials)


# -- analyze ----------------------------------------------------------------

_CHANNEL_RE = re.compile(r"^(?P<signal>[a-z]+)_(?P<joint>\d+)$")


def default_signal_channels(records: Sequence[TrialRecord]) -> list[str]:
    names = [c for c in records[0].channels if _CHANNEL_RE.match(c)]
    preferred = [c for c in names if c.split("_")[0] in ("velocity", "torque", "theta")]
    return preferred or names


def _joint_signal(channel: str) -> tuple[str, str]:
    m = _CHANNEL_RE.match(channel)
    if m:
        return f"#{m.group('joint')}", m.group("signal").capitalize()
    return "", channel


@dataclass
class AnalysisResult:
    deltas: dict
    resources: dict
    correlations: list
    files: list = field(default_factory=list)


def analyze(run_dir, channels: Sequence[str] | None = None, resource_channels: Sequence[str] | None = None,
            plots: bool = False, out_dir=None) -> AnalysisResult:
    """Stochasticity tables, correlation table, variability bands and spectra.

    Trial logs are only read. Outputs go to ``<run_dir>/analysis`` unless
    ``out_dir`` is given.
    """
    layout = RunLayout(run_dir)
    records = read_trials(layout.trials)
    out = Path(out_dir) if out_dir is not None else layout.analysis
    channels = list(channels) if channels else default_signal_channels(records)
    if resource_channels is None:
        resource_channels = [c for c in RESOURCE_COLUMNS if all(c in r.channels for r in records)]
    n_r = len(records)
    files = []

    deltas, summary_rows = {}, []
    for ch in channels:
        ens = ensemble_from_records(records, ch)
        rep = stochasticity(ens)
        deltas[ch] = rep.per_trial_delta
        joint, sig = _joint_signal(ch)
        summary_rows.append([joint, sig, ch, rep.mean_delta, n_r])
        steps = np.arange(1, ens.n_steps + 1)
        band_rows = zip(steps.tolist(), (steps / ens.sample_rate).tolist(), rep.mean_signal.tolist(),
                        rep.sigma_band.tolist())
        path = out / f"band_{ch}.csv"
        write_csv(path, ["step", "time", "mean", "sigma"], band_rows)
        files.append(path)
        if ens.n_steps >= 8:
            spectra = [psd(tr) for tr in ens.trials]
            freqs = spectra[0][0]
            power = np.vstack([p for _, p in spectra])
            path = out / f"psd_{ch}.csv"
            write_csv(path, ["frequency", "mean_power", "min_power", "max_power"],
                      zip(freqs.tolist(), power.mean(0).tolist(), power.min(0).tolist(), power.max(0).tolist()))
            files.append(path)
        if plots:
            files.extend(_plot_channel(out, ch, ens, rep))
    path = out / "stochasticity.csv"
    write_csv(path, ["joint", "signal", "channel", "mean_delta", "n_trials"], summary_rows)
    files.append(path)

    resources = {rc: np.array([resource_mean(r.channels[rc]) for r in records]) for rc in resource_channels}
    per_trial = [[r.trial_id] + [deltas[c][i] for c in channels] + [resources[rc][i] for rc in resource_channels]
                 for i, r in enumerate(records)]
    path = out / "per_trial.csv"
    write_csv(path, ["trial_id"] + [f"delta_{c}" for c in channels] + [f"mean_{rc}" for rc in resource_channels],
              per_trial)
    files.append(path)

    correlations, long_rows, table_rows = [], [], []
    for ch in channels:
        joint, sig = _joint_signal(ch)
        cells = []
        for rc in resource_channels:
            try:
                res = correlate(deltas[ch], resources[rc], ch, rc)
            except PreconditionError as exc:
                long_rows.append([joint, sig, ch, rc, "nan", "nan", "nan", n_r - 2, False, str(exc)])
                cells.append("undefined")
                continue
            correlations.append(res)
            long_rows.append([joint, sig, ch, rc, res.r, res.t_score, res.p_value, res.n_df, res.significant, ""])
            cells.append(res.cell() + ("*" if res.significant else ""))
        table_rows.append([joint, sig, ch, n_r - 2] + cells)
    path = out / "correlation.csv"
    write_csv(path, ["joint", "signal", "channel", "n_df"] + list(resource_channels), table_rows)
    files.append(path)
    path = out / "correlation_long.csv"
    write_csv(path, ["joint", "signal", "channel", "resource", "r", "t", "p", "n_df", "significant", "note"],
              long_rows)
    files.append(path)
    return AnalysisResult(deltas, resources, correlations, files)


def _plot_channel(out: Path, ch: str, ens, rep) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "rtis"
    t = np.arange(1, ens.n_steps + 1) / ens.sample_rate
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(t, rep.mean_signal, lw=1)
    ax.fill_between(t, rep.mean_signal - rep.sigma_band, rep.mean_signal + rep.sigma_band, alpha=0.3)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(ch)
    band = out / f"band_{ch}.svg"
    fig.tight_layout()
    fig.savefig(band, metadata={"Date": None})
    plt.close(fig)
    fig, ax = plt.subplots(figsize=(6, 3))
    f, p = psd(ens.trials[0])
    ax.semilogy(f[1:], np.maximum(p[1:], 1e-300))
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("power")
    spec = out / f"psd_{ch}.svg"
    fig.tight_layout()
    fig.savefig(spec, metadata={"Date": None})
    plt.close(fig)
    return [band, spec]


# -- train ------------------------------------------------------------------

METRIC_COLUMNS = ["agent", "R_ini", "R_ult", "T_hlf", "r_time", "wall_time", "epochs"]


def _load_into(learner: Learner, path) -> dict:
    optimizers = {"policy": learner.pi_opt, "value": learner.v_opt}
    policy, value_net, extra = load_checkpoint(path, optimizers)
    for dst, src in zip(learner.policy.params(), policy.params()):
        dst[...] = src
    for dst, src in zip(learner.value_net.params(), value_net.params()):
        dst[...] = src
    return extra


def train_run(tag, cfg: Config, out, seed: int | None = None, baseline_time: float | None = None,
              checkpoint_every: int = 50, jitter_cv: float | None = None, resume: bool = True) -> TrainingMetrics:
    """Train one agent variant into ``out``; resumes from ``checkpoints/latest.npz`` if present."""
    layout = RunLayout(out)
    ppo_cfg = cfg.ppo if seed is None else replace(cfg.ppo, seed=seed)
    variant = AgentVariant.from_tag(tag) if jitter_cv is None else AgentVariant.from_tag(tag, jitter_cv)
    run_cfg = {**cfg.to_dict(), "ppo": ppo_cfg.to_dict(), "variant": variant.to_dict()}
    write_manifest(layout, "train", run_cfg, ppo_cfg.seed, {"agent": variant.tag.value})
    learner = Learner(ppo_cfg)
    start, curve, times = 0, [], []
    latest = layout.checkpoints / "latest.npz"
    timing = layout.checkpoints / "timing.json"  # kept apart so checkpoints stay byte-reproducible
    if resume and latest.exists():
        extra = _load_into(learner, latest)
        start = int(extra["epoch"]) + 1
        curve = list(extra["curve"])
        times = list(read_json(timing)["times"])[:len(curve)] if timing.exists() else [0.0] * len(curve)
        log.info("resuming %s at epoch %d", out, start)
    offset = times[-1] if times else 0.0

    def on_epoch(epoch, mean_return, elapsed, lrn):
        curve.append(mean_return)
        times.append(offset + elapsed)
        last = epoch == ppo_cfg.epochs - 1
        if last or (checkpoint_every and (epoch + 1) % checkpoint_every == 0):
            _write_curve(layout, curve, times)
            extra = {"epoch": epoch, "curve": curve, "agent": variant.tag.value}
            save_checkpoint(latest, lrn.policy, lrn.value_net, extra,
                            {"policy": lrn.pi_opt, "value": lrn.v_opt})
            write_json(timing, {"times": times})

    train(variant, ppo_cfg, env_cfg=cfg.env, base_arm=cfg.arm, learner=learner, start_epoch=start,
          curve=list(curve), on_epoch=on_epoch)
    wall = times[-1] if times else 0.0
    save_checkpoint(layout.checkpoints / "final.npz", learner.policy, learner.value_net,
                    {"epoch": ppo_cfg.epochs - 1, "agent": variant.tag.value, "variant": variant.to_dict()})
    metrics = training_metrics(curve, wall, baseline_time if baseline_time else max(wall, 1e-9))
    write_csv(layout.root / "metrics.csv", METRIC_COLUMNS,
              [[variant.tag.value, metrics.r_ini, metrics.r_ult, metrics.t_hlf, metrics.r_time, wall, len(curve)]])
    return metrics


def _write_curve(layout: RunLayout, curve, times) -> None:
    write_csv(layout.curve, ["epoch", "mean_reward", "wall_time"],
              ([i, c, t] for i, (c, t) in enumerate(zip(curve, times))))


def train_batch(tags: Sequence, cfg: Config, out, seed: int | None = None, **kw) -> dict:
    """Train several variants into ``out/<tag>``; NA_P goes first and sets the r_time baseline."""
    tags = [parse_tag(t) for t in tags]
    order = sorted(tags, key=lambda t: t is not AgentTag.NA_P)
    base_time = None
    results = {}
    for tag in order:
        m = train_run(tag, cfg, Path(out) / tag.value, seed=seed, baseline_time=base_time, **kw)
        if tag is AgentTag.NA_P:
            base_time = m.wall_time
        results[tag] = m
    if base_time is not None:
        for tag, m in results.items():
            m.r_time = m.wall_time / base_time
    rows = [[t.value, m.r_ini, m.r_ult, m.t_hlf, m.r_time, m.wall_time, m.curve.size] for t, m in results.items()]
    write_csv(Path(out) / "metrics.csv", METRIC_COLUMNS, rows)
    return results


def baseline_wall_time(run_dir) -> float:
    rows = read_csv(RunLayout(run_dir).root / "metrics.csv")
    return float(rows[0]["wall_time"])


# -- eval -------------------------------------------------------------------

@dataclass
class EvalReport:
    success_rate: float
    ultimate_errors: np.ndarray
    n_success: int
    n_total: int
    error_mean: np.ndarray
    error_sigma: np.ndarray
    episode_lengths: np.ndarray

    @property
    def median_error(self) -> float:
        return float(np.median(self.ultimate_errors))


def success_rate(errors, epsilon: float) -> tuple[float, int]:
    errors = np.asarray(errors, dtype=float)
    n_s = int(np.sum(errors < epsilon))
    return 100.0 * n_s / errors.size, n_s


def eval_environment(tag, preset: str, base_arm: ArmModel, nominal_dt: float, jitter_cv: float):
    """Arm and timestep model for an evaluation preset.

    ``matched`` reproduces the center of the agent's training distribution;
    ``sim2real`` deploys on the mismatched arm with jittered steps.
    """
    if preset == "sim2real":
        return mismatched_model(base_arm), TimestepModel.jitter(nominal_dt, jitter_cv)
    variant = AgentVariant.from_tag(tag)
    arm = mismatched_model(base_arm) if variant.tag is AgentTag.NA_I else base_arm
    return arm, variant.timestep_model(nominal_dt)


def evaluate_policy(policy, arm: ArmModel, timestep: TimestepModel, env_cfg: EnvConfig, n_trials: int,
                    seed: int = 0) -> EvalReport:
    """Deterministic (mean-action) episodes; errors after an early finish hold the final value."""
    finals, lengths, curves = [], [], []
    n = env_cfg.max_steps
    for i in range(n_trials):
        env = ReachEnv(arm=arm, timestep=timestep, cfg=env_cfg, seed=np.random.SeedSequence([seed, 5, i]))
        obs = env.reset()
        errs = [env.distance()]
        done = False
        while not done:
            a = np.clip(policy.mean(obs.as_array()), -env_cfg.v_max, env_cfg.v_max)
            obs, _, done = env.step(a)
            errs.append(env.distance())
        errs = np.asarray(errs)
        curve = np.full(n + 1, errs[-1])
        curve[:errs.size] = errs
        curves.append(curve)
        finals.append(errs[-1])
        lengths.append(env.step_count)
    finals = np.asarray(finals)
    rate, n_s = success_rate(finals, env_cfg.epsilon)
    curves = np.vstack(curves)
    return EvalReport(rate, finals, n_s, n_trials, curves.mean(0), curves.std(0), np.asarray(lengths))


EVAL_COLUMNS = ("agent", "preset", "n_total", "n_success", "success_rate", "median_error", "mean_error", "epsilon")


def eval_run(checkpoint, cfg: Config, out, seed: int = 0, preset: str | None = None,
             n_trials: int | None = None, jitter_cv: float | None = None) -> EvalReport:
    checkpoint = Path(checkpoint)
    before = checkpoint.read_bytes()
    policy, _, extra = load_checkpoint(checkpoint)
    tag = extra.get("agent", "NA_P")
    ec = cfg.eval
    preset = preset or ec.preset
    n_trials = n_trials or ec.n_trials
    jitter_cv = ec.jitter_cv if jitter_cv is None else jitter_cv
    arm, ts = eval_environment(tag, preset, cfg.arm, cfg.ppo.nominal_dt, jitter_cv)
    env_cfg = replace(cfg.env, max_steps=cfg.ppo.steps_per_episode, obs_noise_fraction=0.0)
    report = evaluate_policy(policy, arm, ts, env_cfg, n_trials, seed)
    layout = RunLayout(out)
    summary = {
        "agent": tag,
        "checkpoint": str(checkpoint),
        "preset": preset,
        "jitter_cv": jitter_cv if preset == "sim2real" else None,
        "n_total": report.n_total,
        "n_success": report.n_success,
        "success_rate": report.success_rate,
        "median_error": report.median_error,
        "mean_error": float(np.mean(report.ultimate_errors)),
        "epsilon": env_cfg.epsilon,
        "seed": seed,
    }
    write_json(layout.root / "eval.json", summary)
    write_csv(layout.root / "eval_summary.csv", list(EVAL_COLUMNS),
              [[summary[k] if summary[k] is not None else "" for k in EVAL_COLUMNS]])
    write_csv(layout.root / "eval_errors.csv", ["trial", "E_N", "steps", "success"],
              ([i, e, int(s), bool(e < env_cfg.epsilon)]
               for i, (e, s) in enumerate(zip(report.ultimate_errors, report.episode_lengths))))
    write_csv(layout.root / "eval_curve.csv", ["step", "mean_error", "sigma_error"],
              ([i, m, s] for i, (m, s) in enumerate(zip(report.error_mean, report.error_sigma))))
    if checkpoint.read_bytes() != before:
        raise TrialFormatError(f"{checkpoint} changed during evaluation")
    return report


# -- report -----------------------------------------------------------------

REPORT_COLUMNS = ["run", "agent", "R_ini", "R_ult", "T_hlf", "r_time", "preset", "rho_s", "median_E_N",
                  "mean_E_N", "n_total"]


def report(run_dirs: Sequence, out, plots: bool = False) -> list[list]:
    """One row per run, sorted by success rate (descending), then run name."""
    rows = []
    for rd in run_dirs:
        root = Path(rd)
        if not root.is_dir():
            raise FileNotFoundError(f"run directory {root} not found")
        metrics_path, eval_path = root / "metrics.csv", root / "eval.json"
        if not metrics_path.exists() and not eval_path.exists():
            raise FileNotFoundError(f"run {root}: neither metrics.csv nor eval.json present")
        m = read_csv(metrics_path)[0] if metrics_path.exists() else {}
        e = read_json(eval_path) if eval_path.exists() else {}
        rows.append([
            root.name,
            m.get("agent") or e.get("agent", ""),
            float(m["R_ini"]) if m else math.nan,
            float(m["R_ult"]) if m else math.nan,
            float(m["T_hlf"]) if m else math.nan,
            float(m["r_time"]) if m else math.nan,
            e.get("preset", ""),
            float(e["success_rate"]) if e else math.nan,
            float(e["median_error"]) if e else math.nan,
            float(e["mean_error"]) if e else math.nan,
            int(e["n_total"]) if e else 0,
        ])
    rows.sort(key=lambda r: (-(r[7] if not math.isnan(r[7]) else -1.0), r[0]))
    out = Path(out)
    write_csv(out / "comparison.csv", REPORT_COLUMNS, rows)
    if plots:
        _plot_report(out / "comparison.svg", rows)
    return rows


def _plot_report(path: Path, rows) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "rtis"
    labels = [r[1] or r[0] for r in rows]
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(8, 3))
    a1.bar(labels, [r[7] for r in rows])
    a1.set_ylabel("success rate [%]")
    a2.bar(labels, [r[8] for r in rows])
    a2.set_ylabel("median final error [m]")
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
