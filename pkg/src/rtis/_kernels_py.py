"""Pure-Python kernels; the fallback when the compiled extension is missing.

Operation order matches ``_kernels.pyx`` so both paths agree to the last bit
on platforms where ``math`` and the C library share one libm.
"""

import math

import numpy as np


def fk_batch(l1, l2, h, q):
    q = np.ascontiguousarray(q, dtype=np.float64)
    n = q.shape[0]
    out = np.empty((n, 3))
    for k in range(n):
        q1 = q[k, 0]
        q2 = q[k, 1]
        q23 = q2 + q[k, 2]
        planar = l1 * math.cos(q2) + l2 * math.cos(q23)
        out[k, 0] = math.cos(q1) * planar
        out[k, 1] = math.sin(q1) * planar
        out[k, 2] = h + l1 * math.sin(q2) + l2 * math.sin(q23)
    return out


def rollout_constant_velocity(l1, l2, h, lower, upper, q0, v_cmd, dts, nominal_dt):
    """Integrate a constant joint-velocity command over the interval sequence ``dts``.

    Returns joint angles, apparent joint velocities (displacement per nominal
    tick) and end-effector positions after every step, each ``(len(dts), 3)``.
    """
    dts = np.ascontiguousarray(dts, dtype=np.float64)
    n = dts.shape[0]
    q = np.empty((n, 3))
    vel = np.empty((n, 3))
    cur = [float(q0[0]), float(q0[1]), float(q0[2])]
    lo = [float(v) for v in lower]
    hi = [float(v) for v in upper]
    cmd = [float(v) for v in v_cmd]
    for k in range(n):
        dt = dts[k]
        for j in range(3):
            nxt = cur[j] + cmd[j] * dt
            if nxt < lo[j]:
                nxt = lo[j]
            elif nxt > hi[j]:
                nxt = hi[j]
            vel[k, j] = (nxt - cur[j]) / nominal_dt
            q[k, j] = nxt
            cur[j] = nxt
    return q, vel, fk_batch(l1, l2, h, q)


def gae(rewards, values, terminal, gamma, lam):
    """GAE(lambda) over one episode; ``values`` carries the bootstrap entry."""
    rewards = np.ascontiguousarray(rewards, dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    n = rewards.shape[0]
    adv = np.empty(n)
    next_value = 0.0 if terminal else values[n]
    running = 0.0
    for t in range(n - 1, -1, -1):
        delta = rewards[t] + gamma * next_value - values[t]
        running = delta + gamma * lam * running
        adv[t] = running
        next_value = values[t]
    return adv
