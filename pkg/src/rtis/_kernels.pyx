# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def fk_batch(double l1, double l2, double h, q):
    cdef double[:, ::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t n = qv.shape[0], k
    out = np.empty((n, 3))
    cdef double[:, ::1] o = out
    cdef double q1, q2, q23, planar
    for k in range(n):
        q1 = qv[k, 0]
        q2 = qv[k, 1]
        q23 = q2 + qv[k, 2]
        planar = l1 * cos(q2) + l2 * cos(q23)
        o[k, 0] = cos(q1) * planar
        o[k, 1] = sin(q1) * planar
        o[k, 2] = h + l1 * sin(q2) + l2 * sin(q23)
    return out


def rollout_constant_velocity(double l1, double l2, double h, lower, upper, q0, v_cmd, dts, double nominal_dt):
    cdef double[::1] d = np.ascontiguousarray(dts, dtype=np.float64)
    cdef Py_ssize_t n = d.shape[0], k
    cdef int j
    q = np.empty((n, 3))
    vel = np.empty((n, 3))
    cdef double[:, ::1] qv = q
    cdef double[:, ::1] vv = vel
    cdef double cur[3]
    cdef double lo[3]
    cdef double hi[3]
    cdef double cmd[3]
    cdef double dt, nxt
    for j in range(3):
        cur[j] = q0[j]
        lo[j] = lower[j]
        hi[j] = upper[j]
        cmd[j] = v_cmd[j]
    for k in range(n):
        dt = d[k]
        for j in range(3):
            nxt = cur[j] + cmd[j] * dt
            if nxt < lo[j]:
                nxt = lo[j]
            elif nxt > hi[j]:
                nxt = hi[j]
            vv[k, j] = (nxt - cur[j]) / nominal_dt
            qv[k, j] = nxt
            cur[j] = nxt
    return q, vel, fk_batch(l1, l2, h, q)


def gae(rewards, values, bint terminal, double gamma, double lam):
    cdef double[::1] r = np.ascontiguousarray(rewards, dtype=np.float64)
    cdef double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n = r.shape[0], t
    adv = np.empty(n)
    cdef double[::1] a = adv
    cdef double next_value = 0.0 if terminal else v[n]
    cdef double running = 0.0, delta
    for t in range(n - 1, -1, -1):
        delta = r[t] + gamma * next_value - v[t]
        running = delta + gamma * lam * running
        a[t] = running
        next_value = v[t]
    return adv
