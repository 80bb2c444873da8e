# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. ``_pykernels`` mirrors every function bit for bit."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, ceil, INFINITY

cnp.import_array()


cdef inline Py_ssize_t _clip(double v, Py_ssize_t m) nogil:
    if v <= 0.0:
        return 0
    if v >= <double>m:
        return m
    return <Py_ssize_t>v


def rotation_mismatch_counts(double theta, double u0, double inv_h, Py_ssize_t m,
                             const cnp.uint8_t[::1] y):
    """Mismatch counts of rotation codings against ``y`` for u_j = u0 + j/inv_h."""
    cdef Py_ssize_t n = y.shape[0]
    cdef cnp.int64_t[::1] diff = np.zeros(m + 1, dtype=np.int64)
    cdef cnp.int64_t ones = 0
    cdef Py_ssize_t k, j, lo, hi
    cdef double t, p
    cdef cnp.int64_t s
    with nogil:
        for k in range(n):
            t = u0 + k * theta
            p = t - floor(t)
            if y[k]:
                ones += 1
                s = -1
            else:
                s = 1
            lo = _clip(ceil((0.5 - p) * inv_h), m)
            hi = _clip(ceil((1.0 - p) * inv_h), m)
            diff[lo] += s
            diff[hi] -= s
            lo = _clip(ceil((1.5 - p) * inv_h), m)
            hi = _clip(ceil((2.0 - p) * inv_h), m)
            diff[lo] += s
            diff[hi] -= s
    out = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef cnp.int64_t acc = ones
    for j in range(m):
        acc += diff[j]
        o[j] = acc
    return out


cdef inline Py_ssize_t _ceil_clip(long long x, long long d, Py_ssize_t m) nogil:
    # ceil(x / d) clipped to [0, m]; d > 0
    cdef long long q
    if x <= 0:
        return 0
    q = (x + d - 1) // d
    return m if q >= m else <Py_ssize_t>q


def rotation_mismatch_counts_exact(long long a, long long dth, long long b0, long long du,
                                   Py_ssize_t m, const cnp.uint8_t[::1] y):
    """Exact mismatch counts for theta = a/dth and u_j = (b0 + j)/du, j < m <= du."""
    if m > du or dth <= 0 or du <= 0:
        raise ValueError("need 0 < m <= du and positive denominators")
    cdef long long N = 2 * dth * du
    cdef long long half = dth * du
    cdef long long step = (2 * (a % dth) * du) % N
    cdef long long jstep = 2 * dth
    cdef long long p = (2 * (b0 % du) * dth) % N
    cdef Py_ssize_t n = y.shape[0]
    cdef cnp.int64_t[::1] diff = np.zeros(m + 1, dtype=np.int64)
    cdef cnp.int64_t ones = 0
    cdef cnp.int64_t s
    cdef Py_ssize_t k, j
    with nogil:
        for k in range(n):
            if y[k]:
                ones += 1
                s = -1
            else:
                s = 1
            diff[_ceil_clip(half - p, jstep, m)] += s
            diff[_ceil_clip(N - p, jstep, m)] -= s
            diff[_ceil_clip(N + half - p, jstep, m)] += s
            diff[_ceil_clip(2 * N - p, jstep, m)] -= s
            p += step
            if p >= N:
                p -= N
    out = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    cdef cnp.int64_t acc = ones
    for j in range(m):
        acc += diff[j]
        o[j] = acc
    return out


def sft_min_cost_path(const cnp.uint8_t[:, ::1] adj, const double[:, ::1] cost,
                      const cnp.uint8_t[::1] alive):
    """Minimum total cost over admissible words; lexicographically smallest minimizer."""
    cdef Py_ssize_t n = cost.shape[0]
    cdef Py_ssize_t a = cost.shape[1]
    cdef Py_ssize_t k, i, j
    cdef double best, v
    value = np.empty((n, a), dtype=np.float64)
    cdef double[:, ::1] V = value
    word = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] w = word
    with nogil:
        for i in range(a):
            V[n - 1, i] = cost[n - 1, i] if alive[i] else INFINITY
        for k in range(n - 2, -1, -1):
            for i in range(a):
                if not alive[i]:
                    V[k, i] = INFINITY
                    continue
                best = INFINITY
                for j in range(a):
                    if adj[i, j] and alive[j] and V[k + 1, j] < best:
                        best = V[k + 1, j]
                V[k, i] = cost[k, i] + best
        best = INFINITY
        w[0] = -1
        for i in range(a):
            if alive[i] and (w[0] < 0 or V[0, i] < best):
                best = V[0, i]
                w[0] = i
        for k in range(1, n):
            v = INFINITY
            w[k] = -1
            for j in range(a):
                if adj[w[k - 1], j] and alive[j] and (w[k] < 0 or V[k, j] < v):
                    v = V[k, j]
                    w[k] = j
    return best, word
