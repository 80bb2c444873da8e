"""Pure numpy versions of the compiled kernels, used when the extension is absent.

Each function performs the same floating point operations in the same order as
its counterpart in ``_ckernels.pyx`` so both backends return identical results.
"""

import numpy as np


def _clip(v, m):
    return np.clip(v, 0, m).astype(np.int64)


def rotation_mismatch_counts(theta, u0, inv_h, m, y):
    y = np.asarray(y, dtype=np.uint8)
    n = y.shape[0]
    k = np.arange(n, dtype=np.float64)
    t = u0 + k * theta
    p = t - np.floor(t)
    s = np.where(y != 0, -1, 1).astype(np.int64)
    diff = np.zeros(m + 1, dtype=np.int64)
    for lo_edge, hi_edge in ((0.5, 1.0), (1.5, 2.0)):
        lo = _clip(np.ceil((lo_edge - p) * inv_h), m)
        hi = _clip(np.ceil((hi_edge - p) * inv_h), m)
        np.add.at(diff, lo, s)
        np.add.at(diff, hi, -s)
    ones = int(np.count_nonzero(y))
    return ones + np.cumsum(diff[:m])


def _ceil_clip(x, d, m):
    return np.clip(-(-x // d), 0, m)


def rotation_mismatch_counts_exact(a, dth, b0, du, m, y):
    if m > du or dth <= 0 or du <= 0:
        raise ValueError("need 0 < m <= du and positive denominators")
    y = np.asarray(y, dtype=np.uint8)
    n = y.shape[0]
    N = 2 * dth * du
    half = dth * du
    step = (2 * (a % dth) * du) % N
    p0 = (2 * (b0 % du) * dth) % N
    dtype = np.int64 if n * N < 2 ** 62 else object
    p = (p0 + np.arange(n, dtype=dtype) * step) % N
    jstep = 2 * dth
    s = np.where(y != 0, -1, 1).astype(np.int64)
    diff = np.zeros(m + 1, dtype=np.int64)
    for edge, sign in ((half, 1), (N, -1), (N + half, 1), (2 * N, -1)):
        idx = _ceil_clip(edge - p, jstep, m).astype(np.int64)
        np.add.at(diff, idx, sign * s)
    ones = int(np.count_nonzero(y))
    return ones + np.cumsum(diff[:m])


def sft_min_cost_path(adj, cost, alive):
    adj = np.asarray(adj, dtype=bool)
    cost = np.asarray(cost, dtype=np.float64)
    alive = np.asarray(alive, dtype=bool)
    n, a = cost.shape
    edges = adj & alive[None, :] & alive[:, None]
    V = np.empty((n, a))
    V[n - 1] = np.where(alive, cost[n - 1], np.inf)
    for k in range(n - 2, -1, -1):
        nxt = np.where(edges, V[k + 1][None, :], np.inf).min(axis=1)
        V[k] = np.where(alive, cost[k] + nxt, np.inf)
    word = np.zeros(n, dtype=np.int64)
    cand = np.flatnonzero(alive)
    first = cand[np.argmin(V[0, cand])]
    word[0] = first
    for k in range(1, n):
        succ = np.flatnonzero(edges[word[k - 1]])
        word[k] = succ[np.argmin(V[k, succ])]
    return float(V[0, first]), word
