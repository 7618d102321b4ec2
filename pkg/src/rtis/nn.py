"""Dense tanh networks with exact reverse-mode gradients, a diagonal Gaussian
policy head and an Adam optimizer, all on plain numpy arrays.

Inputs are batched row-wise: ``x`` has shape ``(batch, in_dim)``. A single
sample may be passed as a 1-D vector.
"""

from __future__ import annotations

import io
import json
import math
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import PreconditionError, TrialFormatError, UsageError

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
CHECKPOINT_FORMAT = "rtis-checkpoint"
CHECKPOINT_VERSION = 1
_LOG_2PI = math.log(2.0 * math.pi)


def orthogonal(rng: np.random.Generator, n_in: int, n_out: int, gain: float) -> np.ndarray:
    a = rng.standard_normal((max(n_in, n_out), min(n_in, n_out)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if n_in < n_out:
        q = q.T
    return gain * q[:n_in, :n_out]


@dataclass
class Cache:
    """Activations of one forward pass, consumed by :meth:`MLP.backward`."""

    net_id: int
    activations: list  # input followed by each hidden layer's tanh output
    squeeze: bool


class MLP:
    def __init__(self, layer_dims: Sequence[int], rng: np.random.Generator | None = None,
                 hidden_gain: float = math.sqrt(2.0), output_gain: float = 1.0):
        if len(layer_dims) < 2 or any(int(d) < 1 for d in layer_dims):
            raise PreconditionError(f"bad layer dims {layer_dims}")
        self.layer_dims = tuple(int(d) for d in layer_dims)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        n_layers = len(self.layer_dims) - 1
        for i, (a, b) in enumerate(zip(self.layer_dims[:-1], self.layer_dims[1:])):
            gain = output_gain if i == n_layers - 1 else hidden_gain
            self.weights.append(orthogonal(rng, a, b, gain))
            self.biases.append(np.zeros(b))

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def set_params(self, params: Sequence[np.ndarray]) -> None:
        for i in range(len(self.weights)):
            w, b = params[2 * i], params[2 * i + 1]
            if w.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise PreconditionError("parameter shapes do not match the layer chain")
            # in place: optimizers hold references to these arrays
            self.weights[i][...] = w
            self.biases[i][...] = b

    def copy(self) -> "MLP":
        other = MLP.__new__(MLP)
        other.layer_dims = self.layer_dims
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other

    def _prepare(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise PreconditionError(f"input shape {x.shape} does not match in_dim {self.in_dim}")
        return x, squeeze

    def forward(self, x) -> np.ndarray:
        return self.forward_cached(x)[0]

    def forward_cached(self, x) -> tuple[np.ndarray, Cache]:
        h, squeeze = self._prepare(x)
        acts = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = z if i == last else np.tanh(z)
            if i != last:
                acts.append(h)
        out = h[0] if squeeze else h
        return out, Cache(id(self), acts, squeeze)

    def backward(self, cache: Cache | None, grad_out) -> tuple[list[np.ndarray], np.ndarray]:
        """Gradients of ``sum(grad_out * forward(x))`` w.r.t. parameters and input.

        Returns ``(grads, grad_input)`` with ``grads`` ordered like :meth:`params`.
        Batch gradients are sums over rows.
        """
        if cache is None or cache.net_id != id(self):
            raise UsageError("backward needs the cache of a forward pass on this network")
        g = np.asarray(grad_out, dtype=float)
        if cache.squeeze:
            g = g[None, :]
        if g.shape != (cache.activations[0].shape[0], self.out_dim):
            raise PreconditionError(f"upstream gradient shape {g.shape} does not match output")
        grads: list[np.ndarray] = [None] * (2 * len(self.weights))  # type: ignore[list-item]
        for i in range(len(self.weights) - 1, -1, -1):
            a_in = cache.activations[i]
            grads[2 * i] = a_in.T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i].T
            if i > 0:
                g = g * (1.0 - a_in * a_in)
        return grads, (g[0] if cache.squeeze else g)


class GaussianPolicy:
    """Diagonal Gaussian with a network mean and a state-independent log std."""

    def __init__(self, obs_dim: int, act_dim: int, hidden=(128, 64), rng: np.random.Generator | None = None,
                 init_log_std: float = 0.0):
        self.mean_net = MLP((obs_dim, *hidden, act_dim), rng, output_gain=0.01)
        self.log_std = np.full(act_dim, float(init_log_std))
        self.clip_log_std()

    @property
    def act_dim(self) -> int:
        return self.mean_net.out_dim

    def clip_log_std(self) -> None:
        np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX, out=self.log_std)

    def params(self) -> list[np.ndarray]:
        return self.mean_net.params() + [self.log_std]

    def copy(self) -> "GaussianPolicy":
        other = GaussianPolicy.__new__(GaussianPolicy)
        other.mean_net = self.mean_net.copy()
        other.log_std = self.log_std.copy()
        return other

    def mean(self, obs) -> np.ndarray:
        return self.mean_net.forward(obs)

    def log_prob(self, obs, actions) -> np.ndarray:
        mu = self.mean_net.forward(obs)
        return gaussian_log_prob(actions, mu, self.log_std)

    def entropy(self) -> float:
        return float(np.sum(self.log_std) + 0.5 * self.act_dim * (1.0 + _LOG_2PI))


def gaussian_log_prob(x, mu, log_std) -> np.ndarray:
    z = (np.asarray(x) - mu) * np.exp(-log_std)
    return -0.5 * np.sum(z * z, axis=-1) - np.sum(log_std) - 0.5 * z.shape[-1] * _LOG_2PI


def sample_action(policy: GaussianPolicy, obs, rng: np.random.Generator, bound: float | None = None):
    """Draw ``mean + std * z``; returns ``(clamped action, raw sample, log_prob of raw)``."""
    mu = policy.mean(obs)
    raw = mu + np.exp(policy.log_std) * rng.standard_normal(np.shape(mu))
    logp = gaussian_log_prob(raw, mu, policy.log_std)
    action = raw if bound is None else np.clip(raw, -bound, bound)
    return action, raw, logp


class Adam:
    """Adam over a fixed list of arrays, updated in place."""

    def __init__(self, params: Sequence[np.ndarray], lr: float = 3e-4, betas=(0.9, 0.999), eps: float = 1e-8):
        if not lr > 0:
            raise PreconditionError("learning rate must be positive")
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.t = 0

    def step(self, grads: Sequence[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise PreconditionError("gradient list does not match parameters")
        for g in grads:
            if not np.all(np.isfinite(g)):
                raise FloatingPointError("non-finite gradient; update rejected")
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state(self) -> dict:
        return {"t": self.t, "m": [m.copy() for m in self.m], "v": [v.copy() for v in self.v]}

    def load_state(self, state: dict) -> None:
        self.t = int(state["t"])
        for dst, src in zip(self.m, state["m"]):
            dst[...] = src
        for dst, src in zip(self.v, state["v"]):
            dst[...] = src


def sgd_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], lr: float,
             optimizer: Adam | None = None) -> Adam:
    """One adaptive update of ``params`` in place; returns the optimizer carrying the moment state."""
    if optimizer is None:
        optimizer = Adam(params, lr=lr)
    optimizer.step(grads)
    return optimizer


# -- checkpoints -------------------------------------------------------------

def save_checkpoint(path, policy: GaussianPolicy, value_net: MLP, extra: dict | None = None,
                    optimizers: dict[str, Adam] | None = None) -> None:
    """Write an ``.npz`` container: a JSON header with the format version and
    per-array shapes, then the named arrays. Optimizer moments are included
    when given so training can resume exactly."""
    arrays = {}
    opt_steps = {}
    for name, opt in (optimizers or {}).items():
        opt_steps[name] = opt.t
        for i, (m, v) in enumerate(zip(opt.m, opt.v)):
            arrays[f"opt/{name}/m/{i}"] = m
            arrays[f"opt/{name}/v/{i}"] = v
    for i, p in enumerate(policy.mean_net.params()):
        arrays[f"policy/{i}"] = p
    arrays["policy/log_std"] = policy.log_std
    for i, p in enumerate(value_net.params()):
        arrays[f"value/{i}"] = p
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "policy_dims": list(policy.mean_net.layer_dims),
        "value_dims": list(value_net.layer_dims),
        "shapes": {k: list(v.shape) for k, v in arrays.items()},
        "extra": extra or {},
        "optimizer_steps": opt_steps,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {"__header__": np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8), **arrays}
    tmp = path.with_name(path.name + ".tmp")
    with zipfile.ZipFile(tmp, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            # fixed timestamp keeps identical checkpoints byte-identical
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(arr), allow_pickle=False)
            zf.writestr(info, buf.getvalue())
    tmp.replace(path)


def load_checkpoint(path, optimizers: dict[str, Adam] | None = None) -> tuple[GaussianPolicy, MLP, dict]:
    """Read a checkpoint; moments are loaded into ``optimizers`` (keyed as saved) if given."""
    with np.load(Path(path)) as data:
        header = json.loads(bytes(data["__header__"]).decode())
        if header.get("format") != CHECKPOINT_FORMAT:
            raise TrialFormatError(f"{path}: not a checkpoint")
        if header.get("version") != CHECKPOINT_VERSION:
            raise TrialFormatError(f"{path}: unsupported checkpoint version {header.get('version')}")
        for key, shape in header["shapes"].items():
            if list(data[key].shape) != shape:
                raise TrialFormatError(f"{path}: array {key} has shape {data[key].shape}, header says {shape}")
        pdims, vdims = header["policy_dims"], header["value_dims"]
        policy = GaussianPolicy(pdims[0], pdims[-1], hidden=tuple(pdims[1:-1]))
        n_p = 2 * (len(pdims) - 1)
        policy.mean_net.set_params([data[f"policy/{i}"] for i in range(n_p)])
        policy.log_std = np.array(data["policy/log_std"], dtype=float)
        value_net = MLP(vdims)
        value_net.set_params([data[f"value/{i}"] for i in range(2 * (len(vdims) - 1))])
        for name, opt in (optimizers or {}).items():
            if name not in header.get("optimizer_steps", {}):
                raise TrialFormatError(f"{path}: no optimizer state {name!r}")
            n = len(opt.m)
            opt.load_state({
                "t": header["optimizer_steps"][name],
                "m": [data[f"opt/{name}/m/{i}"] for i in range(n)],
                "v": [data[f"opt/{name}/v/{i}"] for i in range(n)],
            })
    return policy, value_net, header.get("extra", {})
