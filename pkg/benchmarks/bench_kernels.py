"""Compiled vs pure-Python kernels on the collect and GAE workloads.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from rtis import _kernels_py as py
from rtis.arm import ArmModel
from rtis.env import P2P_RATE

try:
    from rtis import _kernels as cy
except ImportError:  # extension not built
    cy = None


def workloads(rng):
    arm = ArmModel()
    lo, hi = np.asarray(arm.joint_lower), np.asarray(arm.joint_upper)
    dts = 1e-3 * np.exp(0.1 * rng.standard_normal(10_000))
    v = np.full(3, P2P_RATE)
    rew, val = rng.standard_normal(1000), rng.standard_normal(1001)
    q = rng.uniform(-1, 1, size=(10_000, 3))
    return {
        "rollout 10k steps": lambda k: k.rollout_constant_velocity(0.3, 0.3, 0.2, lo, hi, np.zeros(3), v, dts, 1e-3),
        "gae 1000 steps": lambda k: k.gae(rew, val, False, 0.99, 0.95),
        "fk_batch 10k poses": lambda k: k.fk_batch(0.3, 0.3, 0.2, q),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'workload':<22}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for name, fn in workloads(rng).items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        if cy is None:
            print(f"{name:<22}{t_py:>14.3f}{'n/a':>14}{'':>10}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<22}{t_py:>14.3f}{t_cy:>14.3f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
